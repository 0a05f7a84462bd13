#include <fstream>
#include <sstream>

#include "json.hpp"

#include "robustbench/model.hpp"

namespace robustbench {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, "model field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(where + key, "missing");
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number");
  return v.get<double>();
}

std::vector<double> number_array(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

DenseLayer parse_layer(const json& j, const std::string& where) {
  if (!j.is_object()) field_error(where, "expected an object");
  const json& w = require(j, "weights", where + ".");
  if (!w.is_array() || w.empty()) field_error(where + ".weights", "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < w.size(); ++r) {
    rows.push_back(number_array(w[r], where + ".weights[" + std::to_string(r) + "]"));
  }
  DenseLayer layer;
  try {
    layer.weights = Matrix::from_rows(rows);
  } catch (const Error& e) {
    field_error(where + ".weights", e.what());
  }
  layer.biases = number_array(require(j, "biases", where + "."), where + ".biases");
  const std::string act = j.value("activation", std::string("identity"));
  if (act == "identity") {
    layer.activation = Activation::Identity;
  } else if (act == "relu") {
    layer.activation = Activation::Relu;
  } else {
    field_error(where + ".activation", "unknown activation '" + act + "'");
  }
  return layer;
}

json layer_json(const DenseLayer& layer) {
  json rows = json::array();
  for (std::size_t r = 0; r < layer.weights.rows; ++r) {
    auto row = layer.weights.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"weights", rows},
              {"biases", layer.biases},
              {"activation", layer.activation == Activation::Relu ? "relu" : "identity"}};
}

}  // namespace

ModelPtr parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) field_error("<root>", "expected an object");

  const json& type_field = require(doc, "type", "");
  if (!type_field.is_string()) field_error("type", "expected a string");
  const std::string type = type_field.get<std::string>();

  const json& nc = require(doc, "num_classes", "");
  if (!nc.is_number_integer() || nc.get<long long>() <= 0) field_error("num_classes", "expected a positive integer");
  const auto num_classes = nc.get<std::size_t>();

  const json& shape_field = require(doc, "input_shape", "");
  if (!shape_field.is_array() || shape_field.empty()) field_error("input_shape", "expected a non-empty array");
  Shape shape;
  for (const auto& d : shape_field) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) field_error("input_shape", "dimensions must be positive");
    shape.push_back(d.get<std::size_t>());
  }

  const json& bounds_field = require(doc, "bounds", "");
  if (!bounds_field.is_array() || bounds_field.size() != 2) field_error("bounds", "expected [min, max]");
  Bounds bounds;
  try {
    bounds = Bounds(number(bounds_field[0], "bounds[0]"), number(bounds_field[1], "bounds[1]"));
  } catch (const Error& e) {
    field_error("bounds", e.what());
  }

  const json& layers_field = require(doc, "layers", "");
  if (!layers_field.is_array() || layers_field.empty()) field_error("layers", "expected a non-empty array");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < layers_field.size(); ++i) {
    layers.push_back(parse_layer(layers_field[i], "layers[" + std::to_string(i) + "]"));
  }
  if (layers.back().weights.rows != num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "last layer width does not equal num_classes");
  }

  if (type == "linear") {
    if (layers.size() != 1 || layers[0].activation != Activation::Identity) {
      field_error("layers", "a linear model is a single identity layer");
    }
    return std::make_shared<LinearSoftmaxModel>(std::move(layers[0].weights), std::move(layers[0].biases), bounds,
                                                std::move(shape));
  }
  if (type == "mlp") return std::make_shared<MlpModel>(std::move(layers), bounds, std::move(shape));
  field_error("type", "unknown model type '" + type + "'");
}

ModelPtr load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::string serialize_model(const Model& model) {
  json doc;
  json layers = json::array();
  if (const auto* linear = dynamic_cast<const LinearSoftmaxModel*>(&model)) {
    doc["type"] = "linear";
    layers.push_back(layer_json({linear->weights(), linear->biases(), Activation::Identity}));
  } else if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
    doc["type"] = "mlp";
    for (const auto& layer : mlp->layers()) layers.push_back(layer_json(layer));
  } else {
    throw Error(ErrorCode::InvalidParameter, "only linear and mlp models can be serialized");
  }
  doc["num_classes"] = model.num_classes();
  doc["input_shape"] = model.input_shape();
  doc["bounds"] = {model.bounds().min, model.bounds().max};
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write model file " + path);
  out << serialize_model(model) << '\n';
}

}  // namespace robustbench
