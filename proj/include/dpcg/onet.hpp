#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpcg/dense.hpp"
#include "dpcg/vec.hpp"

namespace dpcg {

enum class Activation { tanh_act, relu, identity };

/// Feed-forward network; hidden layers share one activation, the last
/// layer is always affine.
struct FFN {
    std::vector<std::size_t> widths;   // input, hidden..., output
    Activation activation = Activation::tanh_act;
    std::vector<DenseMatrix> weights;  // weights[l]: widths[l+1] x widths[l]
    std::vector<Vector> biases;        // biases[l]: widths[l+1]

    std::size_t layer_count() const { return weights.size(); }
    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }

    void validate() const;
    static FFN xavier(const std::vector<std::size_t>& widths, Activation act, Rng& rng);
};

Vector ffn_forward(const FFN& net, const Vector& x);

/// How branch inputs were drawn for training; enough to resample fresh
/// inputs from the same law.
struct BranchDistribution {
    std::string kind;  // "grf" | "uniform" | "loguniform"
    std::vector<std::pair<std::string, double>> params;
};

struct BranchSpec {
    FFN net;
    DenseMatrix sensor_coords;  // ny x d sensor locations (may be 0 x 0 for scalar inputs)
    BranchDistribution distribution;
};

/// Per-component affine normalizations applied before the networks see
/// their inputs.
struct Normalization {
    Vector coord_lo, coord_hi;      // per trunk-input component (incl. time)
    std::vector<Vector> branch_mean, branch_std;  // per branch, per component
};

struct DeepONetModel {
    std::size_t p = 0;  // mode count = final width of every subnetwork
    std::size_t d = 1;  // spatial dimension
    bool time_augmented = false;
    std::vector<BranchSpec> branches;
    FFN trunk;
    Normalization normalization;

    std::size_t trunk_input_dim() const { return d + (time_augmented ? 1 : 0); }
    void validate() const;

    Vector normalize_trunk_input(const Vector& xi) const;
    Vector normalize_branch_input(std::size_t b, const Vector& y) const;
};

/// Mode coefficients: elementwise product of all branch outputs at the
/// given (raw) branch inputs.
Vector branch_coefficients(const DeepONetModel& model, const std::vector<Vector>& branch_inputs);

/// Trunk outputs at every coordinate row; result is coords.rows() x p.
DenseMatrix trunk_matrix(const DeepONetModel& model, const DenseMatrix& coords);

/// Prediction u(xi) = sum_q (prod_b B^b_q) T_q(xi), vectorized over the
/// coordinate rows.
Vector deeponet_eval(const DeepONetModel& model, const std::vector<Vector>& branch_inputs,
                     const DenseMatrix& coords);

/// Training sample: raw branch inputs, an index into the shared coordinate
/// sets, and the target solution at those coordinates.
struct Sample {
    std::vector<Vector> branch_inputs;
    std::size_t coord_set = 0;
    Vector target;
};

struct Dataset {
    std::string problem;
    std::uint64_t seed = 0;
    std::size_t d = 1;
    bool time_augmented = false;
    std::vector<DenseMatrix> coord_sets;
    std::vector<DenseMatrix> sensor_coords;  // one per branch
    std::vector<BranchDistribution> distributions;
    std::vector<Sample> samples;

    void validate() const;
};

std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

struct TrainOptions {
    double lr = 1e-4;
    std::size_t batch = 1000;      // capped at the training-set size
    std::size_t max_epochs = 10000;
    std::size_t patience = 2000;   // epochs without validation improvement
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct TrainResult {
    std::vector<double> loss_history;       // training loss per epoch
    std::vector<double> validation_history; // validation loss per epoch
    std::size_t best_epoch = 0;
    double best_validation = 0.0;
};

/// Adam on the mean-squared misfit sum_j ||u~_j - u_j||^2 / (N_s n_don);
/// seeded shuffling, 90/10 train/validation split, returns the weights of
/// the best validation epoch.
TrainResult train(DeepONetModel& model, const Dataset& data, const TrainOptions& opts);

/// Central-difference check of the backpropagated gradient on one sample;
/// returns the max relative error over >= n_checks randomly chosen weights.
double grad_check(const DeepONetModel& model, const Dataset& data, std::size_t sample_index,
                  double epsilon, std::size_t n_checks = 200, std::uint64_t seed = 0);

/// Singular values (descending) of the n x p trunk-output matrix at the
/// given coordinates, via the eigenvalues of the p x p Gram matrix.
Vector trunk_singular_values(const DeepONetModel& model, const DenseMatrix& coords);

void save_model(const DeepONetModel& model, const std::string& path);
DeepONetModel load_model(const std::string& path);

/// Fresh branch inputs drawn from the recorded training distributions.
std::vector<Vector> sample_branch_inputs(const DeepONetModel& model, Rng& rng);

/// Desk-scale architecture defaults: branch FFN[ny, 64, 64, p] and trunk
/// FFN[d(+time), 64, 64, p], tanh activations.
struct ArchOptions {
    std::size_t p = 64;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
};

DeepONetModel make_model(const Dataset& data, const ArchOptions& arch);

}  // namespace dpcg
