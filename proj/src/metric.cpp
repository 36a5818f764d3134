#include "geoloc/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "geoloc/errors.hpp"

namespace geoloc {

namespace {

double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

Embedding l2_normalize(std::span<const double> v) {
    const double n = std::sqrt(sq_norm(v));
    if (n <= 1e-12) throw DataError("l2_normalize: degenerate near-zero vector");
    Embedding out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

bool is_normalized(std::span<const double> v, double tol) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return std::abs(std::sqrt(sq_norm(v)) - 1.0) <= tol;
}

double pair_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("pair_distance: dimension mismatch");
    if (!is_normalized(a, 1e-6) || !is_normalized(b, 1e-6))
        throw DataError("pair_distance: inputs must be L2-normalized");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double contrastive_loss(std::span<const double> a, std::span<const double> b,
                        int label, double margin) {
    const double d = pair_distance(a, b);
    const double hinge = std::max(0.0, margin - d);
    return 0.5 * label * d * d + 0.5 * (1 - label) * hinge * hinge;
}

double similarity(std::span<const double> a, std::span<const double> b) {
    return 1.0 - pair_distance(a, b) / 2.0;
}

std::vector<double> Embedder::forward_raw(std::span<const double> v) const {
    if (static_cast<int>(v.size()) != in_dim)
        throw DataError("embedder: raw feature dimension mismatch");
    const int mid = hidden_dim > 0 ? hidden_dim : out_dim;
    std::vector<double> h(mid, 0.0);
    for (int i = 0; i < mid; ++i) {
        const double* row = &w1[static_cast<std::size_t>(i) * in_dim];
        double s = 0.0;
        for (int j = 0; j < in_dim; ++j) s += row[j] * v[j];
        h[i] = s;
    }
    if (hidden_dim == 0) return h;
    for (double& x : h) x = std::max(0.0, x);
    std::vector<double> z(out_dim, 0.0);
    for (int i = 0; i < out_dim; ++i) {
        const double* row = &w2[static_cast<std::size_t>(i) * hidden_dim];
        double s = 0.0;
        for (int j = 0; j < hidden_dim; ++j) s += row[j] * h[j];
        z[i] = s;
    }
    return z;
}

Embedding Embedder::embed(std::span<const double> v) const {
    return l2_normalize(forward_raw(v));
}

Embedder make_embedder(int in_dim, int out_dim, int hidden_dim, double margin,
                       std::uint64_t seed) {
    if (in_dim <= 0 || out_dim <= 0 || hidden_dim < 0 || margin <= 0.0)
        throw UsageError("make_embedder: bad dimensions or margin");
    Embedder e;
    e.in_dim = in_dim;
    e.out_dim = out_dim;
    e.hidden_dim = hidden_dim;
    e.margin = margin;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(in_dim)));
    const int mid = hidden_dim > 0 ? hidden_dim : out_dim;
    e.w1.resize(static_cast<std::size_t>(mid) * in_dim);
    for (double& w : e.w1) w = g(rng);
    if (hidden_dim > 0) {
        std::normal_distribution<double> g2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
        e.w2.resize(static_cast<std::size_t>(out_dim) * hidden_dim);
        for (double& w : e.w2) w = g2(rng);
    }
    return e;
}

namespace {

// Backprop through one shared-weight branch. grad_e is dL/d(normalized output).
void branch_backward(const Embedder& e, std::span<const double> raw,
                     const std::vector<double>& grad_e, PairGrad& acc) {
    const std::vector<double> z = e.forward_raw(raw);
    const double zn = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
    if (zn <= 1e-12) throw DataError("contrastive_grad: degenerate embedding");
    std::vector<double> en(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) en[i] = z[i] / zn;

    // d/dz of z/|z| applied to grad_e: (g - (g.e)e)/|z|
    double ge = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) ge += grad_e[i] * en[i];
    std::vector<double> gz(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) gz[i] = (grad_e[i] - ge * en[i]) / zn;

    if (e.hidden_dim == 0) {
        for (int i = 0; i < e.out_dim; ++i) {
            double* row = &acc.gw1[static_cast<std::size_t>(i) * e.in_dim];
            for (int j = 0; j < e.in_dim; ++j) row[j] += gz[i] * raw[j];
        }
        return;
    }

    std::vector<double> pre(e.hidden_dim, 0.0);
    for (int i = 0; i < e.hidden_dim; ++i) {
        const double* row = &e.w1[static_cast<std::size_t>(i) * e.in_dim];
        double s = 0.0;
        for (int j = 0; j < e.in_dim; ++j) s += row[j] * raw[j];
        pre[i] = s;
    }
    std::vector<double> h(pre);
    for (double& x : h) x = std::max(0.0, x);

    for (int i = 0; i < e.out_dim; ++i) {
        double* row = &acc.gw2[static_cast<std::size_t>(i) * e.hidden_dim];
        for (int j = 0; j < e.hidden_dim; ++j) row[j] += gz[i] * h[j];
    }
    std::vector<double> gh(e.hidden_dim, 0.0);
    for (int i = 0; i < e.out_dim; ++i) {
        const double* row = &e.w2[static_cast<std::size_t>(i) * e.hidden_dim];
        for (int j = 0; j < e.hidden_dim; ++j) gh[j] += row[j] * gz[i];
    }
    for (int j = 0; j < e.hidden_dim; ++j)
        if (pre[j] <= 0.0) gh[j] = 0.0;
    for (int i = 0; i < e.hidden_dim; ++i) {
        double* row = &acc.gw1[static_cast<std::size_t>(i) * e.in_dim];
        for (int j = 0; j < e.in_dim; ++j) row[j] += gh[i] * raw[j];
    }
}

}  // namespace

PairGrad contrastive_grad(const PairSample& sample, const Embedder& e) {
    PairGrad g;
    g.gw1.assign(e.w1.size(), 0.0);
    g.gw2.assign(e.w2.size(), 0.0);

    const Embedding ex = e.embed(sample.x_raw);
    const Embedding ey = e.embed(sample.y_raw);
    const double d = pair_distance(ex, ey);
    const double hinge = std::max(0.0, e.margin - d);
    g.loss = 0.5 * sample.label * d * d + 0.5 * (1 - sample.label) * hinge * hinge;

    // dL/dD; flat where the hinge is inactive or matched pairs coincide.
    const double dl_dd = sample.label * d - (1 - sample.label) * hinge;
    if (dl_dd == 0.0 || d <= 1e-12) return g;

    std::vector<double> gex(ex.size()), gey(ey.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
        const double u = (ex[i] - ey[i]) / d;
        gex[i] = dl_dd * u;
        gey[i] = -dl_dd * u;
    }
    branch_backward(e, sample.x_raw, gex, g);
    branch_backward(e, sample.y_raw, gey, g);
    return g;
}

Embedder train_embedder(std::span<const PairSample> pairs, int epochs,
                        double learning_rate, std::uint64_t seed,
                        Embedder start, TrainReport* report) {
    bool has_pos = false, has_neg = false;
    for (const auto& p : pairs) (p.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw DataError("train_embedder: need at least one positive and one negative pair");

    Embedder e = std::move(start);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            PairGrad g = contrastive_grad(pairs[idx], e);
            loss_sum += g.loss;
            for (std::size_t i = 0; i < e.w1.size(); ++i) e.w1[i] -= learning_rate * g.gw1[i];
            for (std::size_t i = 0; i < e.w2.size(); ++i) e.w2[i] -= learning_rate * g.gw2[i];
        }
        if (report) report->epoch_loss.push_back(loss_sum / static_cast<double>(pairs.size()));
    }
    return e;
}

double average_precision(std::span<const std::pair<double, int>> scored) {
    std::vector<std::pair<double, int>> s(scored.begin(), scored.end());
    std::stable_sort(s.begin(), s.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    int positives = 0;
    for (const auto& [sc, l] : s) positives += (l != 0);
    if (positives == 0) throw DataError("average_precision: no positive labels");
    double ap = 0.0;
    int hits = 0;
    for (std::size_t rank = 0; rank < s.size(); ++rank) {
        if (s[rank].second != 0) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return ap / positives;
}

void save_embedder(const Embedder& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_embedder: cannot open " + path);
    out << "geoloc-embedder v1\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", e.margin);
    out << e.in_dim << ' ' << e.out_dim << ' ' << e.hidden_dim << ' ' << buf << '\n';
    auto dump = [&](const std::vector<double>& w) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", w[i]);
            out << buf << (i + 1 == w.size() ? '\n' : ' ');
        }
    };
    dump(e.w1);
    if (!e.w2.empty()) dump(e.w2);
}

Embedder load_embedder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_embedder: cannot open " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "geoloc-embedder" || version != "v1")
        throw DataError("load_embedder: unrecognized model file " + path);
    Embedder e;
    in >> e.in_dim >> e.out_dim >> e.hidden_dim >> e.margin;
    if (!in || e.in_dim <= 0 || e.out_dim <= 0 || e.hidden_dim < 0 || e.margin <= 0.0)
        throw DataError("load_embedder: malformed header in " + path);
    const int mid = e.hidden_dim > 0 ? e.hidden_dim : e.out_dim;
    e.w1.resize(static_cast<std::size_t>(mid) * e.in_dim);
    for (double& w : e.w1) in >> w;
    if (e.hidden_dim > 0) {
        e.w2.resize(static_cast<std::size_t>(e.out_dim) * e.hidden_dim);
        for (double& w : e.w2) in >> w;
    }
    if (!in) throw DataError("load_embedder: truncated weights in " + path);
    return e;
}

}  // namespace geoloc
