#include "dpcg/onet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dpcg/problems.hpp"

namespace dpcg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FFN

void FFN::validate() const {
    if (widths.size() < 2) throw std::runtime_error("FFN: need at least one layer");
    if (weights.size() != widths.size() - 1 || biases.size() != weights.size())
        throw std::runtime_error("FFN: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != widths[l + 1] || weights[l].cols() != widths[l])
            throw std::runtime_error("FFN: weight shape mismatch at layer " + std::to_string(l));
        if (biases[l].size() != widths[l + 1])
            throw std::runtime_error("FFN: bias shape mismatch at layer " + std::to_string(l));
        for (double w : weights[l].data())
            if (!std::isfinite(w)) throw std::runtime_error("FFN: non-finite weight");
    }
}

FFN FFN::xavier(const std::vector<std::size_t>& widths, Activation act, Rng& rng) {
    FFN net;
    net.widths = widths;
    net.activation = act;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
        DenseMatrix W(widths[l + 1], widths[l]);
        for (double& w : W.data()) w = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(W));
        net.biases.emplace_back(widths[l + 1], 0.0);
    }
    net.validate();
    return net;
}

namespace {

double activate(Activation act, double z) {
    switch (act) {
        case Activation::tanh_act: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the activated value a = act(z).
double activate_deriv(Activation act, double a, double z) {
    switch (act) {
        case Activation::tanh_act: return 1.0 - a * a;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

struct FfnCache {
    std::vector<Vector> pre;   // z per layer
    std::vector<Vector> post;  // a per layer; post[0] is the input
};

Vector ffn_forward_cached(const FFN& net, const Vector& x, FfnCache& cache) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("ffn_forward: input length " + std::to_string(x.size()) +
                                    " != " + std::to_string(net.input_dim()));
    cache.pre.clear();
    cache.post.clear();
    cache.post.push_back(x);
    Vector a = x;
    const std::size_t L = net.layer_count();
    for (std::size_t l = 0; l < L; ++l) {
        Vector z = net.weights[l].mult(a);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += net.biases[l][i];
        a.resize(z.size());
        const bool last = (l + 1 == L);
        for (std::size_t i = 0; i < z.size(); ++i)
            a[i] = last ? z[i] : activate(net.activation, z[i]);
        cache.pre.push_back(std::move(z));
        cache.post.push_back(a);
    }
    return a;
}

struct FfnGrads {
    std::vector<DenseMatrix> dW;
    std::vector<Vector> db;

    static FfnGrads zeros_like(const FFN& net) {
        FfnGrads g;
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            g.dW.emplace_back(net.weights[l].rows(), net.weights[l].cols());
            g.db.emplace_back(net.biases[l].size(), 0.0);
        }
        return g;
    }
};

// Accumulates parameter gradients for dout = dL/d(output); returns
// dL/d(input).
Vector ffn_backward(const FFN& net, const FfnCache& cache, const Vector& dout, FfnGrads& grads) {
    const std::size_t L = net.layer_count();
    Vector delta = dout;  // last layer is affine
    for (std::size_t lp = L; lp > 0; --lp) {
        const std::size_t l = lp - 1;
        if (lp != L) {
            for (std::size_t i = 0; i < delta.size(); ++i)
                delta[i] *= activate_deriv(net.activation, cache.post[l + 1][i], cache.pre[l][i]);
        }
        const Vector& a_prev = cache.post[l];
        DenseMatrix& dW = grads.dW[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double di = delta[i];
            grads.db[l][i] += di;
            if (di == 0.0) continue;
            for (std::size_t j = 0; j < a_prev.size(); ++j) dW(i, j) += di * a_prev[j];
        }
        if (l > 0 || true) {
            Vector dprev(net.weights[l].cols(), 0.0);
            for (std::size_t i = 0; i < delta.size(); ++i) {
                const double di = delta[i];
                if (di == 0.0) continue;
                for (std::size_t j = 0; j < dprev.size(); ++j) dprev[j] += net.weights[l](i, j) * di;
            }
            delta = std::move(dprev);
        }
    }
    return delta;
}

}  // namespace

Vector ffn_forward(const FFN& net, const Vector& x) {
    FfnCache cache;
    Vector out = ffn_forward_cached(net, x, cache);
    for (double v : out)
        if (!std::isfinite(v)) throw std::runtime_error("ffn_forward: non-finite output");
    return out;
}

// ---------------------------------------------------------------------------
// Model

void DeepONetModel::validate() const {
    if (branches.empty()) throw std::runtime_error("DeepONetModel: no branch networks");
    if (d < 1 || d > 2) throw std::runtime_error("DeepONetModel: d must be 1 or 2");
    trunk.validate();
    if (trunk.output_dim() != p) throw std::runtime_error("DeepONetModel: trunk output != p");
    if (trunk.input_dim() != trunk_input_dim())
        throw std::runtime_error("DeepONetModel: trunk input dim mismatch");
    for (const auto& b : branches) {
        b.net.validate();
        if (b.net.output_dim() != p)
            throw std::runtime_error("DeepONetModel: branch output != p");
    }
    if (normalization.coord_lo.size() != trunk_input_dim() ||
        normalization.coord_hi.size() != trunk_input_dim())
        throw std::runtime_error("DeepONetModel: coordinate normalization dim mismatch");
}

Vector DeepONetModel::normalize_trunk_input(const Vector& xi) const {
    if (xi.size() != trunk_input_dim())
        throw std::invalid_argument("normalize_trunk_input: coordinate dim mismatch");
    Vector out(xi.size());
    for (std::size_t c = 0; c < xi.size(); ++c) {
        const double lo = normalization.coord_lo[c];
        const double hi = normalization.coord_hi[c];
        out[c] = (hi > lo) ? 2.0 * (xi[c] - lo) / (hi - lo) - 1.0 : 0.0;
    }
    return out;
}

Vector DeepONetModel::normalize_branch_input(std::size_t b, const Vector& y) const {
    const Vector& mean = normalization.branch_mean.at(b);
    const Vector& std = normalization.branch_std.at(b);
    if (y.size() != mean.size())
        throw std::invalid_argument("normalize_branch_input: input dim mismatch for branch " +
                                    std::to_string(b));
    Vector out(y.size());
    for (std::size_t c = 0; c < y.size(); ++c) out[c] = (y[c] - mean[c]) / std[c];
    return out;
}

Vector branch_coefficients(const DeepONetModel& model, const std::vector<Vector>& branch_inputs) {
    if (branch_inputs.size() != model.branches.size())
        throw std::invalid_argument("branch_coefficients: expected " +
                                    std::to_string(model.branches.size()) + " branch inputs");
    Vector coef(model.p, 1.0);
    for (std::size_t b = 0; b < model.branches.size(); ++b) {
        const Vector out = ffn_forward(model.branches[b].net, model.normalize_branch_input(b, branch_inputs[b]));
        for (std::size_t q = 0; q < model.p; ++q) coef[q] *= out[q];
    }
    return coef;
}

DenseMatrix trunk_matrix(const DeepONetModel& model, const DenseMatrix& coords) {
    if (coords.cols() != model.trunk_input_dim())
        throw std::invalid_argument("trunk_matrix: coordinate dim mismatch");
    DenseMatrix T(coords.rows(), model.p);
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const Vector out = ffn_forward(model.trunk, model.normalize_trunk_input(coords.row(i)));
        for (std::size_t q = 0; q < model.p; ++q) T(i, q) = out[q];
    }
    return T;
}

Vector deeponet_eval(const DeepONetModel& model, const std::vector<Vector>& branch_inputs,
                     const DenseMatrix& coords) {
    const Vector coef = branch_coefficients(model, branch_inputs);
    const DenseMatrix T = trunk_matrix(model, coords);
    return T.mult(coef);
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
    if (sensor_coords.size() != distributions.size())
        throw std::runtime_error("Dataset: sensors/distributions mismatch");
    for (const auto& s : samples) {
        if (s.branch_inputs.size() != sensor_coords.size())
            throw std::runtime_error("Dataset: sample branch count mismatch");
        if (s.coord_set >= coord_sets.size()) throw std::runtime_error("Dataset: bad coord set index");
        if (s.target.size() != coord_sets[s.coord_set].rows())
            throw std::runtime_error("Dataset: target length does not match coord set");
        for (std::size_t b = 0; b < s.branch_inputs.size(); ++b)
            if (s.branch_inputs[b].size() != samples.front().branch_inputs[b].size())
                throw std::runtime_error("Dataset: inconsistent branch input dims");
    }
}

namespace {

json matrix_to_json(const DenseMatrix& M) {
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", M.data()}};
}

DenseMatrix matrix_from_json(const json& j) {
    DenseMatrix M(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != M.rows() * M.cols()) throw std::runtime_error("matrix: data length mismatch");
    M.data() = data;
    return M;
}

json distribution_to_json(const BranchDistribution& d) {
    json params = json::object();
    for (const auto& [k, v] : d.params) params[k] = v;
    return json{{"kind", d.kind}, {"params", params}};
}

BranchDistribution distribution_from_json(const json& j) {
    BranchDistribution d;
    d.kind = j.at("kind").get<std::string>();
    for (const auto& [k, v] : j.at("params").items()) d.params.emplace_back(k, v.get<double>());
    return d;
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::tanh_act: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    return "tanh";
}

Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw std::runtime_error("unknown activation: " + s);
}

json ffn_to_json(const FFN& net) {
    json j;
    j["widths"] = net.widths;
    j["activation"] = activation_name(net.activation);
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        j["weights"].push_back(net.weights[l].data());
        j["biases"].push_back(net.biases[l]);
    }
    return j;
}

FFN ffn_from_json(const json& j) {
    FFN net;
    net.widths = j.at("widths").get<std::vector<std::size_t>>();
    net.activation = activation_from_name(j.at("activation").get<std::string>());
    const auto& jw = j.at("weights");
    const auto& jb = j.at("biases");
    for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
        DenseMatrix W(net.widths[l + 1], net.widths[l]);
        W.data() = jw.at(l).get<std::vector<double>>();
        if (W.data().size() != net.widths[l + 1] * net.widths[l])
            throw std::runtime_error("FFN weights: length mismatch at layer " + std::to_string(l));
        net.weights.push_back(std::move(W));
        net.biases.push_back(jb.at(l).get<Vector>());
    }
    net.validate();
    return net;
}

}  // namespace

std::string dataset_to_json(const Dataset& data) {
    json j;
    j["format_version"] = 1;
    j["problem"] = data.problem;
    j["seed"] = data.seed;
    j["d"] = data.d;
    j["time_augmented"] = data.time_augmented;
    j["coord_sets"] = json::array();
    for (const auto& c : data.coord_sets) j["coord_sets"].push_back(matrix_to_json(c));
    j["sensor_coords"] = json::array();
    for (const auto& s : data.sensor_coords) j["sensor_coords"].push_back(matrix_to_json(s));
    j["distributions"] = json::array();
    for (const auto& d : data.distributions) j["distributions"].push_back(distribution_to_json(d));
    j["samples"] = json::array();
    for (const auto& s : data.samples)
        j["samples"].push_back(json{{"branch_inputs", s.branch_inputs},
                                    {"coord_set", s.coord_set},
                                    {"target", s.target}});
    return j.dump();
}

Dataset dataset_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("dataset parse error at byte " + std::to_string(e.byte) + ": " +
                                 e.what());
    }
    Dataset data;
    data.problem = j.at("problem").get<std::string>();
    data.seed = j.at("seed").get<std::uint64_t>();
    data.d = j.at("d").get<std::size_t>();
    data.time_augmented = j.at("time_augmented").get<bool>();
    for (const auto& c : j.at("coord_sets")) data.coord_sets.push_back(matrix_from_json(c));
    for (const auto& s : j.at("sensor_coords")) data.sensor_coords.push_back(matrix_from_json(s));
    for (const auto& d : j.at("distributions")) data.distributions.push_back(distribution_from_json(d));
    for (const auto& s : j.at("samples")) {
        Sample smp;
        smp.branch_inputs = s.at("branch_inputs").get<std::vector<Vector>>();
        smp.coord_set = s.at("coord_set").get<std::size_t>();
        smp.target = s.at("target").get<Vector>();
        data.samples.push_back(std::move(smp));
    }
    data.validate();
    return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << dataset_to_json(data) << "\n";
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return dataset_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Model I/O

void save_model(const DeepONetModel& model, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["p"] = model.p;
    j["d"] = model.d;
    j["time_augmented"] = model.time_augmented;
    j["trunk"] = ffn_to_json(model.trunk);
    j["branches"] = json::array();
    for (const auto& b : model.branches) {
        json jb = ffn_to_json(b.net);
        jb["sensor_coords"] = matrix_to_json(b.sensor_coords);
        j["branches"].push_back(jb);
    }
    j["normalization"] = json{{"coord_lo", model.normalization.coord_lo},
                              {"coord_hi", model.normalization.coord_hi},
                              {"branch_mean", model.normalization.branch_mean},
                              {"branch_std", model.normalization.branch_std}};
    j["branch_input_distribution"] = json::array();
    for (const auto& b : model.branches)
        j["branch_input_distribution"].push_back(distribution_to_json(b.distribution));

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << j.dump() << "\n";
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

DeepONetModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw std::runtime_error("model parse error at byte " + std::to_string(e.byte) + ": " +
                                 e.what());
    }
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_model: unsupported format version");

    DeepONetModel model;
    model.p = j.at("p").get<std::size_t>();
    model.d = j.at("d").get<std::size_t>();
    model.time_augmented = j.at("time_augmented").get<bool>();
    model.trunk = ffn_from_json(j.at("trunk"));
    const auto& jdist = j.at("branch_input_distribution");
    std::size_t bi = 0;
    for (const auto& jb : j.at("branches")) {
        BranchSpec spec;
        spec.net = ffn_from_json(jb);
        spec.sensor_coords = matrix_from_json(jb.at("sensor_coords"));
        spec.distribution = distribution_from_json(jdist.at(bi++));
        model.branches.push_back(std::move(spec));
    }
    const auto& jn = j.at("normalization");
    model.normalization.coord_lo = jn.at("coord_lo").get<Vector>();
    model.normalization.coord_hi = jn.at("coord_hi").get<Vector>();
    model.normalization.branch_mean = jn.at("branch_mean").get<std::vector<Vector>>();
    model.normalization.branch_std = jn.at("branch_std").get<std::vector<Vector>>();
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct ModelGrads {
    std::vector<FfnGrads> branches;
    FfnGrads trunk;

    static ModelGrads zeros_like(const DeepONetModel& m) {
        ModelGrads g;
        for (const auto& b : m.branches) g.branches.push_back(FfnGrads::zeros_like(b.net));
        g.trunk = FfnGrads::zeros_like(m.trunk);
        return g;
    }
};

// Flat views over all parameters, branches first then trunk, each layer
// weights then biases, row-major.
std::size_t ffn_param_count(const FFN& n) {
    std::size_t c = 0;
    for (std::size_t l = 0; l < n.layer_count(); ++l)
        c += n.weights[l].data().size() + n.biases[l].size();
    return c;
}

std::size_t model_param_count(const DeepONetModel& m) {
    std::size_t c = ffn_param_count(m.trunk);
    for (const auto& b : m.branches) c += ffn_param_count(b.net);
    return c;
}

double* ffn_param_ptr(FFN& n, std::size_t idx) {
    for (std::size_t l = 0; l < n.layer_count(); ++l) {
        auto& wd = n.weights[l].data();
        if (idx < wd.size()) return &wd[idx];
        idx -= wd.size();
        if (idx < n.biases[l].size()) return &n.biases[l][idx];
        idx -= n.biases[l].size();
    }
    return nullptr;
}

double* model_param_ptr(DeepONetModel& m, std::size_t idx) {
    for (auto& b : m.branches) {
        const std::size_t c = ffn_param_count(b.net);
        if (idx < c) return ffn_param_ptr(b.net, idx);
        idx -= c;
    }
    return ffn_param_ptr(m.trunk, idx);
}

double ffn_grad_at(const FfnGrads& g, std::size_t idx) {
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
        if (idx < g.dW[l].data().size()) return g.dW[l].data()[idx];
        idx -= g.dW[l].data().size();
        if (idx < g.db[l].size()) return g.db[l][idx];
        idx -= g.db[l].size();
    }
    throw std::out_of_range("grad index");
}

double model_grad_at(const DeepONetModel& m, const ModelGrads& g, std::size_t idx) {
    for (std::size_t b = 0; b < m.branches.size(); ++b) {
        const std::size_t c = ffn_param_count(m.branches[b].net);
        if (idx < c) return ffn_grad_at(g.branches[b], idx);
        idx -= c;
    }
    return ffn_grad_at(g.trunk, idx);
}

/// Forward + backward for one sample against a precomputed trunk matrix
/// and caches. Accumulates branch gradients and dL/dT; returns the raw
/// squared misfit ||u~ - u||^2.
double sample_pass(const DeepONetModel& model, const Sample& sample, const DenseMatrix& T,
                   double loss_scale, ModelGrads* grads, DenseMatrix* dT) {
    const std::size_t p = model.p;
    const std::size_t nb = model.branches.size();

    std::vector<FfnCache> caches(nb);
    std::vector<Vector> bout(nb);
    Vector coef(p, 1.0);
    for (std::size_t b = 0; b < nb; ++b) {
        bout[b] = ffn_forward_cached(model.branches[b].net,
                                     model.normalize_branch_input(b, sample.branch_inputs[b]),
                                     caches[b]);
        for (std::size_t q = 0; q < p; ++q) coef[q] *= bout[b][q];
    }

    Vector pred = T.mult(coef);
    double sq = 0.0;
    Vector err(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        err[i] = pred[i] - sample.target[i];
        sq += err[i] * err[i];
    }

    if (grads != nullptr) {
        // dL/dcoef = scale * 2 T^T err
        Vector dcoef = T.mult_transpose(err);
        for (double& v : dcoef) v *= 2.0 * loss_scale;

        for (std::size_t b = 0; b < nb; ++b) {
            Vector dbout(p);
            for (std::size_t q = 0; q < p; ++q) {
                double prod_others = 1.0;
                for (std::size_t b2 = 0; b2 < nb; ++b2)
                    if (b2 != b) prod_others *= bout[b2][q];
                dbout[q] = dcoef[q] * prod_others;
            }
            ffn_backward(model.branches[b].net, caches[b], dbout, grads->branches[b]);
        }

        // dL/dT += scale * 2 err coef^T
        for (std::size_t i = 0; i < err.size(); ++i) {
            const double e2 = 2.0 * loss_scale * err[i];
            if (e2 == 0.0) continue;
            for (std::size_t q = 0; q < p; ++q) (*dT)(i, q) += e2 * coef[q];
        }
    }
    return sq;
}

struct AdamState {
    ModelGrads m, v;
    std::size_t t = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;
};

void adam_update_ffn(FFN& net, FfnGrads& g, FfnGrads& m, FfnGrads& v, double lr, double bc1,
                     double bc2) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& wd = net.weights[l].data();
        auto& gd = g.dW[l].data();
        auto& md = m.dW[l].data();
        auto& vd = v.dW[l].data();
        for (std::size_t i = 0; i < wd.size(); ++i) {
            md[i] = AdamState::beta1 * md[i] + (1.0 - AdamState::beta1) * gd[i];
            vd[i] = AdamState::beta2 * vd[i] + (1.0 - AdamState::beta2) * gd[i] * gd[i];
            wd[i] -= lr * (md[i] / bc1) / (std::sqrt(vd[i] / bc2) + AdamState::eps);
        }
        for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
            double& mb = m.db[l][i];
            double& vb = v.db[l][i];
            const double gb = g.db[l][i];
            mb = AdamState::beta1 * mb + (1.0 - AdamState::beta1) * gb;
            vb = AdamState::beta2 * vb + (1.0 - AdamState::beta2) * gb * gb;
            net.biases[l][i] -= lr * (mb / bc1) / (std::sqrt(vb / bc2) + AdamState::eps);
        }
    }
}

double evaluate_loss(const DeepONetModel& model, const Dataset& data,
                     const std::vector<std::size_t>& indices,
                     const std::vector<DenseMatrix>& trunk_cache) {
    if (indices.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t idx : indices) {
        const Sample& s = data.samples[idx];
        const double n_don = static_cast<double>(s.target.size());
        total += sample_pass(model, s, trunk_cache[s.coord_set], 0.0, nullptr, nullptr) / n_don;
    }
    return total / static_cast<double>(indices.size());
}

struct WeightSnapshot {
    std::vector<FFN> branch_nets;
    FFN trunk;
};

WeightSnapshot snapshot(const DeepONetModel& m) {
    WeightSnapshot s;
    for (const auto& b : m.branches) s.branch_nets.push_back(b.net);
    s.trunk = m.trunk;
    return s;
}

void restore(DeepONetModel& m, const WeightSnapshot& s) {
    for (std::size_t b = 0; b < m.branches.size(); ++b) m.branches[b].net = s.branch_nets[b];
    m.trunk = s.trunk;
}

}  // namespace

TrainResult train(DeepONetModel& model, const Dataset& data_raw, const TrainOptions& opts) {
    model.validate();
    data_raw.validate();
    if (data_raw.samples.empty()) throw std::invalid_argument("train: empty dataset");

    // Optimize against unit-scale targets; the scale is folded back into
    // the trunk output layer afterwards, which multiplies every prediction
    // by the same factor exactly.
    double target_ms = 0.0;
    std::size_t target_count = 0;
    for (const auto& s : data_raw.samples) {
        for (double v : s.target) target_ms += v * v;
        target_count += s.target.size();
    }
    const double target_scale =
        std::max(std::sqrt(target_ms / static_cast<double>(std::max<std::size_t>(target_count, 1))),
                 1e-300);
    Dataset data = data_raw;
    for (auto& s : data.samples)
        for (double& v : s.target) v /= target_scale;

    Rng rng(opts.seed);

    // Seeded validation split (held-out tail of a shuffled index list).
    std::vector<std::size_t> order(data.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(opts.validation_fraction * static_cast<double>(order.size())));
    if (order.size() > 1 && n_val == 0) n_val = 1;
    if (n_val >= order.size()) n_val = order.size() - 1;
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());

    const std::size_t batch = std::max<std::size_t>(1, std::min(opts.batch, train_idx.size()));

    ModelGrads grads = ModelGrads::zeros_like(model);
    AdamState adam;
    adam.m = ModelGrads::zeros_like(model);
    adam.v = ModelGrads::zeros_like(model);

    TrainResult result;
    result.best_validation = std::numeric_limits<double>::infinity();
    WeightSnapshot best = snapshot(model);

    std::vector<DenseMatrix> trunk_cache(data.coord_sets.size());
    std::vector<std::vector<FfnCache>> trunk_caches(data.coord_sets.size());

    for (std::size_t epoch = 0; epoch < opts.max_epochs; ++epoch) {
        // Seeded shuffle of the training indices.
        for (std::size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1],
                      train_idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);

        double epoch_sq = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += batch) {
            const std::size_t end = std::min(start + batch, train_idx.size());
            const double bsize = static_cast<double>(end - start);

            // Coordinate sets present in this batch: forward the trunk once
            // per set, with caches for the backward pass.
            std::set<std::size_t> used;
            for (std::size_t k = start; k < end; ++k) used.insert(data.samples[train_idx[k]].coord_set);
            std::vector<DenseMatrix> dT(data.coord_sets.size());
            for (std::size_t cs : used) {
                const DenseMatrix& coords = data.coord_sets[cs];
                trunk_cache[cs] = DenseMatrix(coords.rows(), model.p);
                trunk_caches[cs].assign(coords.rows(), FfnCache{});
                for (std::size_t i = 0; i < coords.rows(); ++i) {
                    const Vector out = ffn_forward_cached(
                        model.trunk, model.normalize_trunk_input(coords.row(i)), trunk_caches[cs][i]);
                    for (std::size_t q = 0; q < model.p; ++q) trunk_cache[cs](i, q) = out[q];
                }
                dT[cs] = DenseMatrix(coords.rows(), model.p);
            }

            // Zero gradients.
            grads = ModelGrads::zeros_like(model);

            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = data.samples[train_idx[k]];
                const double n_don = static_cast<double>(s.target.size());
                const double scale = 1.0 / (bsize * n_don);
                const double sq = sample_pass(model, s, trunk_cache[s.coord_set], scale, &grads,
                                              &dT[s.coord_set]);
                epoch_sq += sq / n_don;
            }

            // Trunk backward, one coordinate row at a time.
            for (std::size_t cs : used) {
                for (std::size_t i = 0; i < data.coord_sets[cs].rows(); ++i) {
                    Vector dout = dT[cs].row(i);
                    bool nonzero = false;
                    for (double v : dout)
                        if (v != 0.0) {
                            nonzero = true;
                            break;
                        }
                    if (nonzero) ffn_backward(model.trunk, trunk_caches[cs][i], dout, grads.trunk);
                }
            }

            adam.t += 1;
            const double bc1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(adam.t));
            const double bc2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(adam.t));
            for (std::size_t b = 0; b < model.branches.size(); ++b)
                adam_update_ffn(model.branches[b].net, grads.branches[b], adam.m.branches[b],
                                adam.v.branches[b], opts.lr, bc1, bc2);
            adam_update_ffn(model.trunk, grads.trunk, adam.m.trunk, adam.v.trunk, opts.lr, bc1, bc2);
        }

        const double train_loss = epoch_sq / static_cast<double>(train_idx.size());
        if (!std::isfinite(train_loss))
            throw std::runtime_error("train: NaN loss at epoch " + std::to_string(epoch));
        result.loss_history.push_back(train_loss);

        // Validation with the freshly updated weights.
        for (std::size_t cs = 0; cs < data.coord_sets.size(); ++cs)
            trunk_cache[cs] = trunk_matrix(model, data.coord_sets[cs]);
        const double val_loss =
            val_idx.empty() ? train_loss : evaluate_loss(model, data, val_idx, trunk_cache);
        result.validation_history.push_back(val_loss);

        if (val_loss < result.best_validation) {
            result.best_validation = val_loss;
            result.best_epoch = epoch;
            best = snapshot(model);
        } else if (epoch - result.best_epoch >= opts.patience) {
            break;
        }
        if (opts.verbose && epoch % 500 == 0) {
            std::fprintf(stderr, "epoch %zu train %.3e val %.3e\n", epoch, train_loss, val_loss);
        }
    }

    restore(model, best);

    // Fold the target scale into the trunk output layer and report losses
    // in the original units.
    for (double& w : model.trunk.weights.back().data()) w *= target_scale;
    for (double& b : model.trunk.biases.back()) b *= target_scale;
    const double s2 = target_scale * target_scale;
    for (double& l : result.loss_history) l *= s2;
    for (double& l : result.validation_history) l *= s2;
    result.best_validation *= s2;
    return result;
}

double grad_check(const DeepONetModel& model, const Dataset& data, std::size_t sample_index,
                  double epsilon, std::size_t n_checks, std::uint64_t seed) {
    if (epsilon < 1e-7 || epsilon > 1e-4)
        throw std::invalid_argument("grad_check: epsilon must lie in [1e-7, 1e-4]");
    const Sample& s = data.samples.at(sample_index);
    const double n_don = static_cast<double>(s.target.size());

    DeepONetModel work = model;

    auto loss_of = [&](DeepONetModel& m) {
        const DenseMatrix T = trunk_matrix(m, data.coord_sets[s.coord_set]);
        return sample_pass(m, s, T, 0.0, nullptr, nullptr) / n_don;
    };

    // Analytic gradient of the same per-sample loss.
    ModelGrads grads = ModelGrads::zeros_like(work);
    {
        const DenseMatrix& coords = data.coord_sets[s.coord_set];
        DenseMatrix T(coords.rows(), model.p);
        std::vector<FfnCache> tcaches(coords.rows());
        for (std::size_t i = 0; i < coords.rows(); ++i) {
            const Vector out =
                ffn_forward_cached(work.trunk, work.normalize_trunk_input(coords.row(i)), tcaches[i]);
            for (std::size_t q = 0; q < model.p; ++q) T(i, q) = out[q];
        }
        DenseMatrix dT(coords.rows(), model.p);
        sample_pass(work, s, T, 1.0 / n_don, &grads, &dT);
        for (std::size_t i = 0; i < coords.rows(); ++i)
            ffn_backward(work.trunk, tcaches[i], dT.row(i), grads.trunk);
    }

    const std::size_t total = model_param_count(work);
    Rng rng(seed);
    std::vector<std::size_t> picks;
    if (total <= n_checks) {
        picks.resize(total);
        for (std::size_t i = 0; i < total; ++i) picks[i] = i;
    } else {
        picks = rng.sample_without_replacement(total, n_checks);
    }

    // Errors are measured against the gradient magnitude |g| (max norm),
    // floored at 1e-8, so coordinates where the gradient happens to vanish
    // do not turn finite-difference roundoff into spurious failures.
    double gmax = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx)
        gmax = std::max(gmax, std::abs(model_grad_at(work, grads, idx)));
    const double denom = std::max(gmax, 1e-8);

    double max_rel = 0.0;
    for (std::size_t idx : picks) {
        double* w = model_param_ptr(work, idx);
        const double saved = *w;
        *w = saved + epsilon;
        const double lp = loss_of(work);
        *w = saved - epsilon;
        const double lm = loss_of(work);
        *w = saved;
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double analytic = model_grad_at(work, grads, idx);
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
    }
    return max_rel;
}

Vector trunk_singular_values(const DeepONetModel& model, const DenseMatrix& coords) {
    const DenseMatrix T = trunk_matrix(model, coords);
    const std::size_t p = model.p;
    DenseMatrix G(p, p);
    for (std::size_t i = 0; i < T.rows(); ++i)
        for (std::size_t a = 0; a < p; ++a) {
            const double t = T(i, a);
            if (t == 0.0) continue;
            for (std::size_t b = a; b < p; ++b) G(a, b) += t * T(i, b);
        }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) G(a, b) = G(b, a);
    const EigResult eig = dense_sym_eig(G);
    // Gram eigenvalues below relative machine noise carry no information
    // about the singular values; clip them to zero along with negatives.
    const double lam_max = std::max(eig.eigenvalues.back(), 0.0);
    const double floor = 1e-14 * lam_max;
    Vector sigma(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double lam = eig.eigenvalues[p - 1 - i];
        sigma[i] = lam > floor ? std::sqrt(lam) : 0.0;
    }
    return sigma;
}

std::vector<Vector> sample_branch_inputs(const DeepONetModel& model, Rng& rng) {
    std::vector<Vector> inputs;
    for (const auto& b : model.branches) {
        const auto param = [&](const std::string& name) {
            for (const auto& [k, v] : b.distribution.params)
                if (k == name) return v;
            throw std::runtime_error("branch distribution: missing parameter " + name);
        };
        if (b.distribution.kind == "grf") {
            GrfSampler sampler(b.sensor_coords, param("mean"), param("sigma"), param("ell"));
            inputs.push_back(sampler.draw(rng));
        } else if (b.distribution.kind == "uniform") {
            inputs.push_back(Vector{rng.uniform(param("lo"), param("hi"))});
        } else if (b.distribution.kind == "loguniform") {
            // The branch input is the log10 value itself.
            inputs.push_back(Vector{rng.uniform(param("lo"), param("hi"))});
        } else if (b.distribution.kind.empty()) {
            throw std::runtime_error("sample_branch_inputs: branch carries no distribution metadata");
        } else {
            throw std::runtime_error("sample_branch_inputs: unknown distribution kind '" +
                                     b.distribution.kind + "'");
        }
    }
    return inputs;
}

DeepONetModel make_model(const Dataset& data, const ArchOptions& arch) {
    data.validate();
    if (data.samples.empty()) throw std::invalid_argument("make_model: empty dataset");
    Rng rng(arch.seed);

    DeepONetModel model;
    model.p = arch.p;
    model.d = data.d;
    model.time_augmented = data.time_augmented;

    const std::size_t tin = model.trunk_input_dim();
    model.trunk = FFN::xavier({tin, arch.hidden, arch.hidden, arch.p}, Activation::tanh_act, rng);

    for (std::size_t b = 0; b < data.sensor_coords.size(); ++b) {
        const std::size_t ny = data.samples.front().branch_inputs[b].size();
        BranchSpec spec;
        spec.net = FFN::xavier({ny, arch.hidden, arch.hidden, arch.p}, Activation::tanh_act, rng);
        spec.sensor_coords = data.sensor_coords[b];
        spec.distribution = data.distributions[b];
        model.branches.push_back(std::move(spec));
    }

    // Coordinate range over all coordinate sets.
    model.normalization.coord_lo.assign(tin, std::numeric_limits<double>::infinity());
    model.normalization.coord_hi.assign(tin, -std::numeric_limits<double>::infinity());
    for (const auto& cs : data.coord_sets) {
        if (cs.cols() != tin) throw std::invalid_argument("make_model: coord set dim mismatch");
        for (std::size_t i = 0; i < cs.rows(); ++i)
            for (std::size_t c = 0; c < tin; ++c) {
                model.normalization.coord_lo[c] = std::min(model.normalization.coord_lo[c], cs(i, c));
                model.normalization.coord_hi[c] = std::max(model.normalization.coord_hi[c], cs(i, c));
            }
    }

    // Branch standardization from the dataset.
    for (std::size_t b = 0; b < model.branches.size(); ++b) {
        const std::size_t ny = data.samples.front().branch_inputs[b].size();
        Vector mean(ny, 0.0), var(ny, 0.0);
        for (const auto& s : data.samples)
            for (std::size_t c = 0; c < ny; ++c) mean[c] += s.branch_inputs[b][c];
        for (double& m : mean) m /= static_cast<double>(data.samples.size());
        for (const auto& s : data.samples)
            for (std::size_t c = 0; c < ny; ++c) {
                const double d = s.branch_inputs[b][c] - mean[c];
                var[c] += d * d;
            }
        Vector std(ny);
        for (std::size_t c = 0; c < ny; ++c)
            std[c] = std::max(std::sqrt(var[c] / static_cast<double>(data.samples.size())), 1e-12);
        model.normalization.branch_mean.push_back(std::move(mean));
        model.normalization.branch_std.push_back(std::move(std));
    }

    model.validate();
    return model;
}

}  // namespace dpcg
