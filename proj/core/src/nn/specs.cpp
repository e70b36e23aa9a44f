#include "treecnn/nn/specs.hpp"

#include <string>

#include "treecnn/common/error.hpp"

namespace treecnn::specs {

namespace {

class Builder {
 public:
  explicit Builder(Shape input) { spec_.input = std::move(input); }

  Builder& conv(const std::string& name, const std::string& block, std::size_t channels,
                std::size_t kernel) {
    spec_.layers.push_back(conv_layer(name, block, channels, kernel));
    spec_.layers.push_back(batch_norm_layer(name + "/bn", block));
    spec_.layers.push_back(relu_layer(name + "/relu", block));
    return *this;
  }
  Builder& max_pool(const std::string& name, const std::string& block) {
    spec_.layers.push_back(max_pool_layer(name, block));
    return *this;
  }
  Builder& avg_pool(const std::string& name, const std::string& block) {
    spec_.layers.push_back(avg_pool_layer(name, block));
    return *this;
  }
  Builder& dropout(const std::string& name, const std::string& block, double p) {
    spec_.layers.push_back(dropout_layer(name, block, p));
    return *this;
  }
  Builder& fc(const std::string& name, std::size_t units, bool relu) {
    spec_.layers.push_back(fc_layer(name, "FC", units));
    if (relu) spec_.layers.push_back(relu_layer(name + "/relu", "FC"));
    return *this;
  }
  NetworkSpec softmax() {
    spec_.layers.push_back(softmax_layer());
    validate(spec_);
    return spec_;
  }

 private:
  NetworkSpec spec_;
};

}  // namespace

NetworkSpec cifar10_root(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1", "CONV-1", 64, 5)
      .max_pool("pool1", "CONV-1")
      .conv("conv2a", "CONV-2", 128, 3)
      .dropout("drop2", "CONV-2", 0.5)
      .conv("conv2b", "CONV-2", 128, 3)
      .max_pool("pool2", "CONV-2")
      .fc("fc1", 512, true)
      .dropout("drop-fc1", "FC", 0.5)
      .fc("fc2", 128, true)
      .dropout("drop-fc2", "FC", 0.5)
      .fc("fc3", n, true)
      .softmax();
}

NetworkSpec cifar10_branch(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1", "CONV-1", 32, 5)
      .max_pool("pool1", "CONV-1")
      .dropout("drop1", "CONV-1", 0.25)
      .conv("conv2", "CONV-2", 64, 5)
      .max_pool("pool2", "CONV-2")
      .dropout("drop2", "CONV-2", 0.25)
      .conv("conv3", "CONV-3", 64, 3)
      .avg_pool("pool3", "CONV-3")
      .dropout("drop3", "CONV-3", 0.25)
      .fc("fc1", 128, true)
      .dropout("drop-fc1", "FC", 0.5)
      .fc("fc2", n, true)
      .softmax();
}

NetworkSpec network_b(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1a", "CONV-1", 64, 3)
      .dropout("drop1", "CONV-1", 0.5)
      .conv("conv1b", "CONV-1", 64, 3)
      .max_pool("pool1", "CONV-1")
      .conv("conv2a", "CONV-2", 128, 3)
      .dropout("drop2", "CONV-2", 0.5)
      .conv("conv2b", "CONV-2", 128, 3)
      .max_pool("pool2", "CONV-2")
      .conv("conv3a", "CONV-3", 256, 3)
      .dropout("drop3", "CONV-3", 0.5)
      .conv("conv3b", "CONV-3", 256, 3)
      .max_pool("pool3", "CONV-3")
      .conv("conv4a", "CONV-4", 512, 3)
      .dropout("drop4", "CONV-4", 0.5)
      .conv("conv4b", "CONV-4", 512, 3)
      .avg_pool("pool4", "CONV-4")
      .fc("fc1", 1024, true)
      .dropout("drop-fc1", "FC", 0.5)
      .fc("fc2", 1024, true)
      .dropout("drop-fc2", "FC", 0.5)
      .fc("fc3", n, false)
      .softmax();
}

NetworkSpec cifar100_root(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1", "CONV-1", 64, 5)
      .max_pool("pool1", "CONV-1")
      .conv("conv2a", "CONV-2", 128, 3)
      .dropout("drop2", "CONV-2", 0.5)
      .conv("conv2b", "CONV-2", 128, 3)
      .max_pool("pool2", "CONV-2")
      .conv("conv3a", "CONV-3", 256, 3)
      .dropout("drop3", "CONV-3", 0.5)
      .conv("conv3b", "CONV-3", 256, 3)
      .avg_pool("pool3", "CONV-3")
      .fc("fc1", 1024, true)
      .dropout("drop-fc1", "FC", 0.5)
      .fc("fc2", 1024, true)
      .dropout("drop-fc2", "FC", 0.5)
      .fc("fc3", n, false)
      .softmax();
}

NetworkSpec cifar100_branch(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1", "CONV-1", 32, 5)
      .max_pool("pool1", "CONV-1")
      .dropout("drop1", "CONV-1", 0.25)
      .conv("conv2", "CONV-2", 64, 5)
      .max_pool("pool2", "CONV-2")
      .dropout("drop2", "CONV-2", 0.25)
      .conv("conv3a", "CONV-3", 64, 3)
      .dropout("drop3", "CONV-3", 0.5)
      .conv("conv3b", "CONV-3", 64, 3)
      .avg_pool("pool3", "CONV-3")
      .fc("fc1", 512, true)
      .dropout("drop-fc1", "FC", 0.5)
      .fc("fc2", 128, true)
      .dropout("drop-fc2", "FC", 0.5)
      .fc("fc3", n, false)
      .softmax();
}

NetworkSpec desk_node(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1", "CONV-1", 8, 5)
      .max_pool("pool1", "CONV-1")
      .conv("conv2", "CONV-2", 16, 3)
      .max_pool("pool2", "CONV-2")
      .fc("fc1", 48, true)
      .dropout("drop-fc1", "FC", 0.25)
      .fc("fc2", n, false)
      .softmax();
}

NetworkSpec desk_network_b(std::size_t n, Shape input) {
  return Builder(std::move(input))
      .conv("conv1a", "CONV-1", 8, 3)
      .conv("conv1b", "CONV-1", 8, 3)
      .max_pool("pool1", "CONV-1")
      .conv("conv2a", "CONV-2", 16, 3)
      .conv("conv2b", "CONV-2", 16, 3)
      .max_pool("pool2", "CONV-2")
      .conv("conv3a", "CONV-3", 32, 3)
      .conv("conv3b", "CONV-3", 32, 3)
      .max_pool("pool3", "CONV-3")
      .conv("conv4a", "CONV-4", 64, 3)
      .conv("conv4b", "CONV-4", 64, 3)
      .avg_pool("pool4", "CONV-4")
      .fc("fc1", 128, true)
      .dropout("drop-fc1", "FC", 0.25)
      .fc("fc2", 128, true)
      .dropout("drop-fc2", "FC", 0.25)
      .fc("fc3", n, false)
      .softmax();
}

std::vector<std::string_view> names() {
  return {"cifar10-root", "cifar10-branch", "network-b", "cifar100-root",
          "cifar100-branch", "desk-node", "desk-network-b"};
}

NetworkSpec by_name(std::string_view name, std::size_t n, std::optional<Shape> input) {
  const bool desk = name.starts_with("desk");
  Shape in = input ? *input : (desk ? Shape{1, 28, 28} : Shape{3, 32, 32});
  if (name == "cifar10-root") return cifar10_root(n, in);
  if (name == "cifar10-branch") return cifar10_branch(n, in);
  if (name == "network-b") return network_b(n, in);
  if (name == "cifar100-root") return cifar100_root(n, in);
  if (name == "cifar100-branch") return cifar100_branch(n, in);
  if (name == "desk-node") return desk_node(n, in);
  if (name == "desk-network-b") return desk_network_b(n, in);
  throw ConfigError("spec", "unknown network '" + std::string(name) + "'");
}

}  // namespace treecnn::specs
