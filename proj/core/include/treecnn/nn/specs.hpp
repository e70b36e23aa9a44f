#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "treecnn/nn/spec.hpp"

namespace treecnn::specs {

// Node and baseline networks of the reference experiments. Every convolution
// is followed by batch-norm and ReLU; convolutions use same padding. Layer
// blocks are tagged "CONV-1".."CONV-4" and "FC".

// CIFAR-10 root: 64 5x5 | pool | 128 3x3, drop .5, 128 3x3 | pool |
// FC 8192-512-128-N (ReLU after every FC, including the last).
NetworkSpec cifar10_root(std::size_t n = 2, Shape input = {3, 32, 32});

// CIFAR-10 branch: 32 5x5 | pool | drop .25 | 64 5x5 | pool | drop .25 |
// 64 3x3 | avg pool | drop .25 | FC 1024-128-N (ReLU on the last FC).
NetworkSpec cifar10_branch(std::size_t n, Shape input = {3, 32, 32});

// Baseline network B: four blocks of two 3x3 convolutions (64, 128, 256,
// 512) separated by pooling, then FC 2048-1024-1024-N.
NetworkSpec network_b(std::size_t n, Shape input = {3, 32, 32});

// CIFAR-100 root: 64 5x5 | pool | 128, 128 | pool | 256, 256 | avg pool |
// FC 4096-1024-1024-N.
NetworkSpec cifar100_root(std::size_t n, Shape input = {3, 32, 32});

// CIFAR-100 branch: 32 5x5 | pool | 64 5x5 | pool | 64, 64 3x3 | avg pool |
// FC 1024-512-128-N.
NetworkSpec cifar100_branch(std::size_t n, Shape input = {3, 32, 32});

// Desk-scale node for 1x28x28 inputs, under 50k weights for N <= 200.
NetworkSpec desk_node(std::size_t n, Shape input = {1, 28, 28});

// Desk-scale counterpart of network B for 1x28x28 inputs.
NetworkSpec desk_network_b(std::size_t n, Shape input = {1, 28, 28});

// Lookup by name: cifar10-root, cifar10-branch, network-b, cifar100-root,
// cifar100-branch, desk-node, desk-network-b.
NetworkSpec by_name(std::string_view name, std::size_t n, std::optional<Shape> input = std::nullopt);

std::vector<std::string_view> names();

}  // namespace treecnn::specs
