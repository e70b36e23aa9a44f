#include "treecnn/nn/spec.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace treecnn {

using json = nlohmann::ordered_json;

namespace {

struct KindName {
  LayerKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::conv, "conv"},
    {LayerKind::max_pool, "max-pool"},
    {LayerKind::avg_pool, "avg-pool"},
    {LayerKind::fully_connected, "fully-connected"},
    {LayerKind::relu, "relu"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::batch_norm, "batch-norm"},
    {LayerKind::softmax, "softmax"},
};

bool matches(const LayerSpec& layer, const std::string& entry) {
  return layer.name == entry || (!layer.block.empty() && layer.block == entry);
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string_view to_string(LayerKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view text) {
  for (const auto& kn : kKindNames)
    if (kn.name == text) return kn.kind;
  throw ConfigError("layers[].kind", "unknown layer kind '" + std::string(text) + "'");
}

LayerSpec conv_layer(std::string name, std::string block, std::size_t out_channels,
                     std::size_t kernel) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.name = std::move(name);
  l.block = std::move(block);
  l.out_channels = out_channels;
  l.kernel = kernel;
  return l;
}

LayerSpec fc_layer(std::string name, std::string block, std::size_t out_features) {
  LayerSpec l;
  l.kind = LayerKind::fully_connected;
  l.name = std::move(name);
  l.block = std::move(block);
  l.out_features = out_features;
  return l;
}

LayerSpec max_pool_layer(std::string name, std::string block, std::size_t window) {
  LayerSpec l;
  l.kind = LayerKind::max_pool;
  l.name = std::move(name);
  l.block = std::move(block);
  l.window = window;
  return l;
}

LayerSpec avg_pool_layer(std::string name, std::string block, std::size_t window) {
  LayerSpec l = max_pool_layer(std::move(name), std::move(block), window);
  l.kind = LayerKind::avg_pool;
  return l;
}

LayerSpec relu_layer(std::string name, std::string block) {
  LayerSpec l;
  l.kind = LayerKind::relu;
  l.name = std::move(name);
  l.block = std::move(block);
  return l;
}

LayerSpec dropout_layer(std::string name, std::string block, double p) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.name = std::move(name);
  l.block = std::move(block);
  l.dropout = p;
  return l;
}

LayerSpec batch_norm_layer(std::string name, std::string block) {
  LayerSpec l;
  l.kind = LayerKind::batch_norm;
  l.name = std::move(name);
  l.block = std::move(block);
  return l;
}

LayerSpec softmax_layer(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::softmax;
  l.name = std::move(name);
  return l;
}

std::size_t NetworkSpec::outputs() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->kind == LayerKind::fully_connected) return it->out_features;
  return 0;
}

std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
  if (spec.input.empty() || shape_size(spec.input) == 0)
    throw ShapeError("input", "input shape " + shape_string(spec.input) + " is empty");

  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size());
  Shape cur = spec.input;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::conv: {
        if (cur.size() != 3)
          throw ShapeError(l.name, "convolution needs a {C,H,W} input, got " + shape_string(cur));
        if (l.kernel == 0 || l.kernel % 2 == 0)
          throw ShapeError(l.name, "kernel extent must be odd for same padding");
        if (l.out_channels == 0 || l.stride == 0)
          throw ShapeError(l.name, "out_channels and stride must be positive");
        cur = {l.out_channels, (cur[1] - 1) / l.stride + 1, (cur[2] - 1) / l.stride + 1};
        break;
      }
      case LayerKind::max_pool:
      case LayerKind::avg_pool: {
        if (cur.size() != 3)
          throw ShapeError(l.name, "pooling needs a {C,H,W} input, got " + shape_string(cur));
        if (l.window == 0 || cur[1] < l.window || cur[2] < l.window)
          throw ShapeError(l.name, "pool window " + std::to_string(l.window) +
                                       " does not fit input " + shape_string(cur));
        cur = {cur[0], cur[1] / l.window, cur[2] / l.window};
        break;
      }
      case LayerKind::fully_connected:
        if (l.out_features == 0) throw ShapeError(l.name, "out_features must be positive");
        cur = {l.out_features};
        break;
      case LayerKind::softmax:
        if (cur.size() != 1)
          throw ShapeError(l.name, "softmax needs a flat input, got " + shape_string(cur));
        break;
      case LayerKind::relu:
      case LayerKind::dropout:
      case LayerKind::batch_norm:
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

void validate(const NetworkSpec& spec) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.name.empty()) throw ConfigError("layers[" + std::to_string(i) + "].name", "empty");
    if (!names.insert(l.name).second)
      throw ConfigError("layers[" + std::to_string(i) + "].name", "duplicate name '" + l.name + "'");
    if (l.kind == LayerKind::dropout && !(l.dropout >= 0.0 && l.dropout < 1.0))
      throw ConfigError("layers[" + std::to_string(i) + "].dropout", "must be in [0,1)");
    if (l.kind == LayerKind::softmax && i + 1 != spec.layers.size())
      throw ConfigError("layers[" + std::to_string(i) + "]", "softmax must be the final layer");
  }
  if (spec.outputs() == 0) throw ConfigError("layers", "network has no fully-connected layer");
  infer_shapes(spec);
}

NetworkSpec with_outputs(NetworkSpec spec, std::size_t n) {
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (it->kind == LayerKind::fully_connected) {
      it->out_features = n;
      return spec;
    }
  }
  throw ConfigError("layers", "network has no fully-connected layer");
}

NetworkSpec shrink(NetworkSpec spec, std::size_t factor) {
  if (factor <= 1) return spec;
  std::size_t last_fc = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].kind == LayerKind::fully_connected) last_fc = i;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto& l = spec.layers[i];
    if (l.kind == LayerKind::conv) l.out_channels = std::max<std::size_t>(1, l.out_channels / factor);
    if (l.kind == LayerKind::fully_connected && i != last_fc)
      l.out_features = std::max<std::size_t>(1, l.out_features / factor);
  }
  return spec;
}

std::uint64_t count_weights(const NetworkSpec& spec,
                            std::optional<std::span<const std::string>> subset) {
  std::vector<bool> selected(spec.layers.size(), true);
  if (subset) selected = select_layers(spec, *subset);

  const auto shapes = infer_shapes(spec);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!selected[i]) continue;
    const auto& l = spec.layers[i];
    const Shape& in = i == 0 ? spec.input : shapes[i - 1];
    if (l.kind == LayerKind::conv)
      total += static_cast<std::uint64_t>(in[0]) * l.out_channels * l.kernel * l.kernel;
    else if (l.kind == LayerKind::fully_connected)
      total += static_cast<std::uint64_t>(shape_size(in)) * l.out_features;
  }
  return total;
}

std::vector<bool> select_layers(const NetworkSpec& spec, std::span<const std::string> subset) {
  std::vector<bool> selected(spec.layers.size(), false);
  for (const auto& entry : subset) {
    bool found = false;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      if (matches(spec.layers[i], entry)) {
        selected[i] = true;
        found = true;
      }
    }
    if (!found) throw ConfigError("layer_subset", "unknown layer or block '" + entry + "'");
  }
  return selected;
}

std::vector<std::string> conv_blocks(const NetworkSpec& spec) {
  std::vector<std::string> blocks;
  for (const auto& l : spec.layers) {
    if (l.kind != LayerKind::conv) continue;
    const std::string& tag = l.block.empty() ? l.name : l.block;
    if (std::find(blocks.begin(), blocks.end(), tag) == blocks.end()) blocks.push_back(tag);
  }
  return blocks;
}

namespace {

json layer_to_json(const LayerSpec& l) {
  json j;
  j["name"] = l.name;
  j["kind"] = std::string(to_string(l.kind));
  if (!l.block.empty()) j["block"] = l.block;
  switch (l.kind) {
    case LayerKind::conv:
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["bias"] = l.bias;
      break;
    case LayerKind::fully_connected:
      j["out_features"] = l.out_features;
      j["bias"] = l.bias;
      break;
    case LayerKind::max_pool:
    case LayerKind::avg_pool:
      j["window"] = l.window;
      break;
    case LayerKind::dropout:
      j["p"] = l.dropout;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  l.block = j.value("block", std::string{});
  l.out_channels = j.value("out_channels", std::size_t{0});
  l.kernel = j.value("kernel", std::size_t{0});
  l.stride = j.value("stride", std::size_t{1});
  l.window = j.value("window", std::size_t{2});
  l.out_features = j.value("out_features", std::size_t{0});
  l.dropout = j.value("p", 0.0);
  l.bias = j.value("bias", true);
  return l;
}

}  // namespace

std::string to_text(const NetworkSpec& spec) {
  json j;
  j["input"] = spec.input;
  j["outputs"] = spec.outputs();
  json layers = json::array();
  for (const auto& l : spec.layers) layers.push_back(layer_to_json(l));
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

NetworkSpec spec_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  }
  NetworkSpec spec;
  try {
    spec.input = j.at("input").get<Shape>();
    for (const auto& lj : j.at("layers")) spec.layers.push_back(layer_from_json(lj));
  } catch (const json::exception& e) {
    throw FormatError(std::string("network spec: ") + e.what());
  }
  validate(spec);
  if (j.contains("outputs") && j["outputs"].get<std::size_t>() != spec.outputs())
    throw ConfigError("outputs", "does not match the final fully-connected layer");
  return spec;
}

std::uint64_t spec_hash(const NetworkSpec& spec) { return fnv1a(to_text(spec)); }

}  // namespace treecnn
