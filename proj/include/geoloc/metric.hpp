#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace geoloc {

using Embedding = std::vector<double>;  // unit Euclidean norm after l2_normalize

Embedding l2_normalize(std::span<const double> v);
bool is_normalized(std::span<const double> v, double tol = 1e-9);

// Euclidean distance between two normalized embeddings; lies in [0, 2].
double pair_distance(std::span<const double> a, std::span<const double> b);

// L = 1/2 l D^2 + 1/2 (1-l) max(0, m-D)^2
double contrastive_loss(std::span<const double> a, std::span<const double> b,
                        int label, double margin);

// Bounded distance mapped linearly onto [0, 1].
double similarity(std::span<const double> a, std::span<const double> b);

struct PairSample {
    std::vector<double> x_raw;  // street-side raw features
    std::vector<double> y_raw;  // bird-side raw features
    int label = 0;              // 1 matched, 0 unmatched
};

// Shared-weight embedder: one linear map, or linear-ReLU-linear when
// hidden_dim > 0. Output is fed through l2_normalize before any distance.
struct Embedder {
    int in_dim = 64;
    int out_dim = 32;
    int hidden_dim = 0;  // 0 = plain linear
    double margin = 1.0;
    std::vector<double> w1;  // (hidden_dim ? hidden_dim : out_dim) x in_dim row-major
    std::vector<double> w2;  // out_dim x hidden_dim, empty when linear

    std::vector<double> forward_raw(std::span<const double> v) const;
    Embedding embed(std::span<const double> v) const;
};

Embedder make_embedder(int in_dim, int out_dim, int hidden_dim, double margin,
                       std::uint64_t seed);

struct PairGrad {
    std::vector<double> gw1;
    std::vector<double> gw2;
    double loss = 0.0;
};

// Analytic gradient of contrastive_loss(embed(x), embed(y), l) w.r.t. weights.
PairGrad contrastive_grad(const PairSample& sample, const Embedder& e);

struct TrainReport {
    std::vector<double> epoch_loss;  // average loss after each epoch
};

Embedder train_embedder(std::span<const PairSample> pairs, int epochs,
                        double learning_rate, std::uint64_t seed,
                        Embedder start, TrainReport* report = nullptr);

// Standard AP over the ranking by descending score; label 1 = positive.
double average_precision(std::span<const std::pair<double, int>> scored);

void save_embedder(const Embedder& e, const std::string& path);
Embedder load_embedder(const std::string& path);

}  // namespace geoloc
