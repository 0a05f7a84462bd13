#include <cmath>
#include <filesystem>

#include "../support.hpp"
#include "doctest.h"
#include "robustbench/attacks/decision.hpp"
#include "robustbench/dataset.hpp"

using namespace rbtest;

namespace {

Tensor random_image(Rng& rng, std::size_t h, std::size_t w, double lo = 0.1, double hi = 0.9) {
  std::vector<double> v(h * w);
  for (double& e : v) e = rng.uniform(lo, hi);
  return Tensor(v, Shape{h, w});
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("boundary attack approaches the linear margin") {
  Rng gen(81);
  const auto p = random_linear_problem(gen, 2, 10, 0.2);
  AdversarialState s(p.model, Criterion::misclassification(), DistanceMeasure::MeanSquared, p.x0, p.label);
  s.enable_trace(true);
  Rng rng(3);
  const auto o = boundary_attack(s, DecisionAttackConfig{}, rng);
  REQUIRE(o.success);
  CHECK(ref_l2(*o.adversarial, p.x0) <= 2.0 * p.margin);
  CHECK(non_increasing(s.trace()));
  CHECK(verify_outcome(s, o).empty());
}

TEST_CASE("boundary attack uses only decisions") {
  Rng gen(82);
  const auto mlp = random_mlp(gen, 8, 10, 3);
  const auto masked = std::make_shared<DecisionOnlyModel>(mlp);
  std::vector<double> v(8);
  for (double& e : v) e = gen.uniform();
  const Tensor x0(v);
  const Label label{argmax(mlp->logits(x0))};
  AdversarialState a(mlp, Criterion::misclassification(), DistanceMeasure::MeanSquared, x0, label);
  AdversarialState b(masked, Criterion::misclassification(), DistanceMeasure::MeanSquared, x0, label);
  a.enable_trace(true);
  b.enable_trace(true);
  DecisionAttackConfig cfg;
  cfg.boundary_iterations = 500;
  Rng ra(4), rb(4);
  const auto oa = boundary_attack(a, cfg, ra);
  const auto ob = boundary_attack(b, cfg, rb);
  CHECK(a.trace() == b.trace());
  CHECK(*oa.adversarial == *ob.adversarial);
}

TEST_CASE("boundary attack without a starting point") {
  const auto m = linear({{1, 1}, {0, 0}}, {10, 0});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, Tensor{0.5, 0.5}, Label{0});
  DecisionAttackConfig cfg;
  cfg.boundary_init_trials = 50;
  Rng rng(1);
  CHECK(code_of([&] { boundary_attack(s, cfg, rng); }) == ErrorCode::StartingPointNotFound);
  CHECK(s.prediction_calls() == 50);
}

TEST_CASE("boundary attack accepts a supplied starting point") {
  const auto m = linear({{-1, 0}, {1, 0}}, {0.5, -0.5});
  const Tensor x0{0.1, 0.5};
  AdversarialState s(m, Criterion::target_class(Label{1}), DistanceMeasure::MeanSquared, x0, Label{0});
  DecisionAttackConfig cfg;
  cfg.boundary_iterations = 200;
  cfg.boundary_init_trials = 1;
  cfg.starting_point = Tensor{0.95, 0.5};
  Rng rng(1);
  const auto o = boundary_attack(s, cfg, rng);
  REQUIRE(o.success);
  CHECK(o.distance.value <= distance(DistanceMeasure::MeanSquared, x0, Tensor{0.95, 0.5}, Bounds(0, 1)).value);
}

TEST_CASE("two boundary runs: the second never ends worse") {
  Rng gen(83);
  const auto p = random_linear_problem(gen, 3, 6, 0.3);
  AdversarialState s(p.model, Criterion::misclassification(), DistanceMeasure::MeanSquared, p.x0, p.label);
  DecisionAttackConfig cfg;
  cfg.boundary_iterations = 200;
  Rng rng(9);
  const auto first = boundary_attack(s, cfg, rng);
  const auto second = boundary_attack(s, cfg, rng);
  CHECK(second.distance.value <= first.distance.value);
}

TEST_CASE("pointwise reduces to the single relevant element") {
  Rng gen(84);
  const Tensor x0 = random_image(gen, 5, 6);
  auto m = std::make_shared<PredicateModel>([x0](const Tensor& x) { return x[5] != x0[5]; }, Shape{5, 6});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::L0, x0, Label{0});
  Rng rng(2);
  const auto o = pointwise_attack(s, DecisionAttackConfig{}, rng);
  REQUIRE(o.success);
  CHECK(o.distance.value == 1.0);
  CHECK((*o.adversarial)[5] != x0[5]);
  CHECK(o.tuned_parameters.at("initial_l0") >= o.tuned_parameters.at("final_l0"));
}

TEST_CASE("pointwise leaves an already minimal input unchanged") {
  Rng gen(85);
  const Tensor x0 = random_image(gen, 4, 4);
  auto m = std::make_shared<PredicateModel>([x0](const Tensor& x) { return x[5] != x0[5]; }, Shape{4, 4});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::L0, x0, Label{0});
  Tensor start = x0;
  start[5] = 1.0;
  s.try_candidate(start);
  Rng rng(1);
  const auto o = pointwise_attack(s, DecisionAttackConfig{}, rng);
  REQUIRE(o.success);
  CHECK(*o.adversarial == start);
}

TEST_CASE("pointwise final L0 never exceeds the initial L0") {
  Rng gen(86);
  const auto mlp = random_mlp(gen, 25, 10, 3, Bounds(0, 1), Shape{5, 5});
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x0 = random_image(gen, 5, 5);
    AdversarialState s(mlp, Criterion::misclassification(), DistanceMeasure::L0, x0, Label{argmax(mlp->logits(x0))});
    Rng rng(trial);
    try {
      const auto o = pointwise_attack(s, DecisionAttackConfig{}, rng);
      CHECK(o.tuned_parameters.at("final_l0") <= o.tuned_parameters.at("initial_l0"));
      CHECK(o.distance.value == o.tuned_parameters.at("final_l0"));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AttackFailed);
    }
  }
}

TEST_CASE("additive noise fails against a huge margin") {
  const auto m = linear({{1, 1}, {0, 0}}, {10, 0});
  for (auto dist : {NoiseDistribution::Uniform, NoiseDistribution::Gaussian}) {
    AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, Tensor{0.5, 0.5}, Label{0});
    Rng rng(1);
    CHECK(code_of([&] { additive_noise_attack(s, dist, DecisionAttackConfig{}, rng); }) == ErrorCode::AttackFailed);
  }
}

TEST_CASE("additive noise succeeds against a small margin") {
  Rng gen(87);
  const auto p = random_linear_problem(gen, 2, 8, 0.05);
  for (auto dist : {NoiseDistribution::Uniform, NoiseDistribution::Gaussian}) {
    AdversarialState s(p.model, Criterion::misclassification(), DistanceMeasure::MeanSquared, p.x0, p.label);
    Rng rng(2);
    const auto o = additive_noise_attack(s, dist, DecisionAttackConfig{}, rng);
    REQUIRE(o.success);
    CHECK(o.tuned_parameters.at("epsilon") > 0.0);
    CHECK(verify_outcome(s, o).empty());
    // No perturbation smaller than the margin can be adversarial.
    CHECK(ref_l2(*o.adversarial, p.x0) >= p.margin - 1e-12);
  }
}

TEST_CASE("salt and pepper finds the extreme-fraction threshold") {
  Rng gen(88);
  const Tensor x0 = random_image(gen, 200, 200);
  auto m = std::make_shared<PredicateModel>(
      [](const Tensor& x) {
        std::size_t extreme = 0;
        for (double v : x) extreme += (v == 0.0 || v == 1.0);
        return extreme >= 0.4 * static_cast<double>(x.size());
      },
      Shape{200, 200});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::L0, x0, Label{0});
  Rng rng(3);
  const auto o = salt_and_pepper_attack(s, DecisionAttackConfig{}, rng);
  REQUIRE(o.success);
  CHECK(std::fabs(o.tuned_parameters.at("p") - 0.4) <= 0.01);
  // Every changed element is an extreme value.
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double v = (*o.adversarial)[i];
    if (v != x0[i]) CHECK((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("salt and pepper at p = 1 sets every element to an extreme") {
  Rng gen(89);
  const Tensor x0 = random_image(gen, 3, 3);
  auto m = std::make_shared<PredicateModel>(
      [](const Tensor& x) { return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0 || v == 1.0; }); },
      Shape{3, 3});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::L0, x0, Label{0});
  Rng rng(4);
  const auto o = salt_and_pepper_attack(s, DecisionAttackConfig{}, rng);
  REQUIRE(o.success);
  CHECK(o.distance.value == 9.0);
}

TEST_CASE("contrast reduction") {
  Rng gen(90);
  const Tensor x0 = random_image(gen, 3, 4);
  auto flat = std::make_shared<PredicateModel>(
      [](const Tensor& x) { return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.5; }); }, Shape{3, 4});
  AdversarialState s(flat, Criterion::misclassification(), DistanceMeasure::MeanSquared, x0, Label{0});
  const auto o = contrast_reduction_attack(s);
  REQUIRE(o.success);
  CHECK(o.tuned_parameters.at("epsilon") == 1.0);
  CHECK(*o.adversarial == Tensor::filled({3, 4}, 0.5));

  // On a linear model the result lies between x0 and the mid-range image.
  const auto p = [&] {
    Rng g2(91);
    return random_linear_problem(g2, 2, 6, 0.05);
  }();
  AdversarialState t(p.model, Criterion::misclassification(), DistanceMeasure::MeanSquared, p.x0, p.label);
  try {
    const auto r = contrast_reduction_attack(t);
    for (std::size_t i = 0; i < 6; ++i) {
      const double lo = std::min(p.x0[i], 0.5), hi = std::max(p.x0[i], 0.5);
      CHECK((*r.adversarial)[i] >= lo);
      CHECK((*r.adversarial)[i] <= hi);
    }
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AttackFailed);
  }
}

TEST_CASE("gaussian blur properties") {
  Rng gen(92);
  const Tensor img = random_image(gen, 8, 8, 0.0, 1.0);
  const auto layout = spatial_layout(img.shape());
  CHECK(gaussian_blur(img, layout, 0.0) == img);
  CHECK(gaussian_blur(img, layout, 1e-9) == img);
  const Tensor flat = Tensor::filled({5, 7}, 0.3);
  for (double sigma : {0.5, 1.0, 3.0, 10.0}) {
    const Tensor b = gaussian_blur(flat, spatial_layout(flat.shape()), sigma);
    for (double v : b) CHECK(v == doctest::Approx(0.3).epsilon(1e-14));
  }
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_image(gen, 8, 8, 0.0, 1.0);
    double before = 0.0, after = 0.0;
    for (double v : x) before += v;
    for (double v : gaussian_blur(x, layout, gen.uniform(0.3, 5.0))) after += v;
    CHECK(std::fabs(before - after) / 64 <= 1e-6);
  }
}

TEST_CASE("gaussian blur keeps channels apart") {
  std::vector<double> v(4 * 4 * 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0) ? 0.2 : 0.9;
  const Tensor img(v, Shape{4, 4, 2});
  const Tensor b = gaussian_blur(img, spatial_layout(img.shape()), 1.5);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(b[i] == doctest::Approx(v[i]).epsilon(1e-14));
}

TEST_CASE("gaussian blur attack needs a spatial input") {
  const auto m = linear({{1, 0}, {0, 1}}, {0.5, 0});
  AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, Tensor{0.5, 0.5}, Label{0});
  CHECK(code_of([&] { gaussian_blur_attack(s); }) == ErrorCode::NotSpatialInput);
}

TEST_CASE("precomputed images") {
  const auto m = linear({{-1, 0}, {1, 0}}, {0.5, -0.5});
  const Tensor x0{0.2, 0.5}, other{0.3, 0.3};
  const PrecomputedTable table({{x0, Tensor{0.8, 0.5}}, {other, Tensor{0.31, 0.3}}});
  {
    AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, x0, Label{0});
    const auto o = precomputed_images_attack(s, table);
    REQUIRE(o.success);
    CHECK(o.distance.value == distance(DistanceMeasure::MeanSquared, x0, Tensor{0.8, 0.5}, Bounds(0, 1)).value);
    CHECK(s.prediction_calls() == 1);
  }
  {
    AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, other, Label{0});
    CHECK(code_of([&] { precomputed_images_attack(s, table); }) == ErrorCode::AttackFailed);
    CHECK_FALSE(s.best_distance().is_finite());
  }
  {
    AdversarialState s(m, Criterion::misclassification(), DistanceMeasure::MeanSquared, Tensor{0.1, 0.1}, Label{0});
    CHECK(code_of([&] { precomputed_images_attack(s, table); }) == ErrorCode::InputNotInTable);
  }
}

TEST_CASE("precomputed table files round-trip bit-exactly") {
  Rng gen(93);
  std::vector<Tensor> inputs, candidates;
  for (int i = 0; i < 5; ++i) {
    inputs.push_back(random_image(gen, 2, 3, 0.0, 1.0).reshaped({6}));
    candidates.push_back(random_image(gen, 2, 3, 0.0, 1.0).reshaped({6}));
  }
  const auto dir = std::filesystem::temp_directory_path() / "rb_precomputed_unit";
  std::filesystem::create_directories(dir);
  write_csv_dataset((dir / "inputs.csv").string(), inputs, std::vector<Label>(5));
  write_csv_dataset((dir / "candidates.csv").string(), candidates, std::vector<Label>(5));
  const auto table = load_precomputed_table(dir.string());
  CHECK(table.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const Tensor* found = table.find(inputs[i].reshaped({2, 3}));
    REQUIRE(found != nullptr);
    CHECK(found->data() == candidates[i].data());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("decision config validation") {
  DecisionAttackConfig c;
  c.boundary_step_adaptation = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.boundary_spherical_step = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.pointwise_rounds = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
