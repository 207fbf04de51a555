// Command-line harness: dataset generation, training, single solves,
// benchmark sweeps, and spectrum diagnostics.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "dpcg/datagen.hpp"
#include "dpcg/deflation.hpp"
#include "dpcg/grouping.hpp"
#include "dpcg/krylov.hpp"
#include "dpcg/onet.hpp"
#include "dpcg/precond.hpp"
#include "dpcg/problems.hpp"

namespace {

using namespace dpcg;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// Deterministic per-repetition seed stream.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t rep, std::uint64_t salt) {
    std::uint64_t x = base + 0x9E3779B97F4A7C15ULL * (rep + 1) + salt * 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

PrecondKind parse_precond(const std::string& s) {
    if (s == "identity") return PrecondKind::identity;
    if (s == "jacobi") return PrecondKind::jacobi;
    if (s == "ssor") return PrecondKind::ssor;
    if (s == "icc") return PrecondKind::icc0;
    if (s == "asm") return PrecondKind::asm_overlap;
    throw CLI::ValidationError("--precond", "unknown preconditioner '" + s + "'");
}

struct SolveConfig {
    std::string problem = "poisson1d";
    std::size_t n = 50;
    std::uint64_t seed = 1;
    double kchannel = 0.0;  // jumpdarcy: fixed channel coefficient if > 0
    std::string precond = "icc";
    double omega = 1.0;
    std::size_t S = 4;
    std::size_t overlap = 1;
    std::string deflation = "none";
    std::size_t k = 5;
    std::string grouping = "dd";
    std::string model_path;
    std::string guess = "normal";  // normal | zeros
    std::size_t heat_steps = 20;
    double heat_dt = 0.02;
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    std::size_t max_iter = 0;
};

void add_solve_flags(CLI::App* cmd, SolveConfig& cfg) {
    cmd->add_option("--problem", cfg.problem, "poisson1d | darcy | jumpdarcy | heat")
        ->check(CLI::IsMember({"poisson1d", "darcy", "jumpdarcy", "heat"}));
    cmd->add_option("--n", cfg.n, "interior grid nodes per axis");
    cmd->add_option("--seed", cfg.seed, "base seed for parameters and guesses");
    cmd->add_option("--kchannel", cfg.kchannel, "fixed jumpdarcy channel coefficient");
    cmd->add_option("--precond", cfg.precond, "identity | jacobi | ssor | icc | asm");
    cmd->add_option("--omega", cfg.omega, "SSOR relaxation");
    cmd->add_option("--S", cfg.S, "group / subdomain count");
    cmd->add_option("--overlap", cfg.overlap, "ASM overlap layers");
    cmd->add_option("--deflation", cfg.deflation, "none | nico | tb | rs")
        ->check(CLI::IsMember({"none", "nico", "tb", "rs"}));
    cmd->add_option("--k", cfg.k, "deflation vectors");
    cmd->add_option("--grouping", cfg.grouping, "cd | dd | cl")
        ->check(CLI::IsMember({"cd", "dd", "cl"}));
    cmd->add_option("--model", cfg.model_path, "trained model file (tb/rs/cl)");
    cmd->add_option("--guess", cfg.guess, "initial guess: normal | zeros")
        ->check(CLI::IsMember({"normal", "zeros"}));
    cmd->add_option("--steps", cfg.heat_steps, "heat: implicit-Euler steps");
    cmd->add_option("--dt", cfg.heat_dt, "heat: time-step size");
    cmd->add_option("--rel-tol", cfg.rel_tol, "relative residual tolerance");
    cmd->add_option("--abs-tol", cfg.abs_tol, "absolute residual tolerance");
    cmd->add_option("--max-iter", cfg.max_iter, "iteration cap (0 = 10n)");
}

void validate_config(const SolveConfig& cfg) {
    if (cfg.deflation != "none" && cfg.k < 1)
        throw CLI::ValidationError("--k", "need k >= 1 when deflation is enabled");
    if ((cfg.deflation == "tb" || cfg.deflation == "rs" || cfg.grouping == "cl") &&
        cfg.model_path.empty())
        throw CLI::ValidationError("--model", "tb/rs deflation and cl grouping need a model file");
    if (cfg.grouping == "cd" && cfg.problem != "jumpdarcy")
        throw CLI::ValidationError("--grouping",
                                   "cd grouping uses the channel layout; jumpdarcy only");
}

DenseMatrix spatial_coords(const ParametricProblem& prob) {
    DenseMatrix xy(prob.coords.rows(), std::min<std::size_t>(prob.coords.cols(), 2));
    for (std::size_t i = 0; i < xy.rows(); ++i)
        for (std::size_t c = 0; c < xy.cols(); ++c) xy(i, c) = prob.coords(i, c);
    return xy;
}

ProblemInstance make_instance(const SolveConfig& cfg, const DeepONetModel* model,
                              std::uint64_t instance_seed) {
    if (cfg.problem == "poisson1d") {
        DenseMatrix sensors =
            model != nullptr ? model->branches[0].sensor_coords : sensor_line(32);
        return sample_poisson1d_instance(cfg.n, sensors, instance_seed);
    }
    const Grid2D grid = Grid2D::unit_square(cfg.n);
    if (cfg.problem == "darcy") {
        DenseMatrix sensors =
            model != nullptr ? model->branches[0].sensor_coords : sensor_lattice(16);
        return sample_darcy_instance(grid, sensors, instance_seed);
    }
    if (cfg.problem == "jumpdarcy")
        return sample_jumpdarcy_instance(grid, instance_seed, cfg.kchannel);
    throw CLI::ValidationError("--problem", "heat runs are driven per step");
}

IndexSets make_groups(const SolveConfig& cfg, const ProblemInstance& inst,
                      const DeepONetModel* model, std::uint64_t group_seed) {
    const SparseMatrix& A = inst.problem.A;
    if (cfg.grouping == "dd") return partition_graph(A, spatial_coords(inst.problem), cfg.S);
    if (cfg.grouping == "cd") {
        const Grid2D grid = Grid2D::unit_square(cfg.n);
        return groups_from_labels(channel_node_labels(grid, geometric_channel_mask(grid)));
    }
    if (cfg.grouping == "cl") {
        if (model == nullptr) throw std::runtime_error("cl grouping needs a model");
        const Vector pred = deeponet_eval(*model, inst.branch_inputs, inst.problem.coords);
        DenseMatrix features(pred.size(), 1);
        for (std::size_t i = 0; i < pred.size(); ++i) features(i, 0) = pred[i];
        return kmeans_groups(features, cfg.S, {.seed = group_seed});
    }
    throw CLI::ValidationError("--grouping", "unknown grouping '" + cfg.grouping + "'");
}

NicoKind nico_kind_for(const std::string& problem) {
    return problem == "heat" ? NicoKind::helmholtz_directions : NicoKind::constant;
}

std::optional<DeflationOperator> make_deflation(const SolveConfig& cfg, const ProblemInstance& inst,
                                                const DeepONetModel* model, const IndexSets& groups,
                                                std::uint64_t basis_seed) {
    if (cfg.deflation == "none") return std::nullopt;
    TentativeBasis basis;
    if (cfg.deflation == "nico") {
        basis = nico_vectors(nico_kind_for(cfg.problem), spatial_coords(inst.problem));
    } else if (cfg.deflation == "tb") {
        basis = tb_vectors(*model, inst.problem.coords, cfg.k, basis_seed);
    } else if (cfg.deflation == "rs") {
        basis = rs_vectors(*model, inst.problem.coords, cfg.k, inst.branch_inputs, basis_seed);
    } else {
        throw CLI::ValidationError("--deflation", "unknown deflation '" + cfg.deflation + "'");
    }
    return assemble_deflation(inst.problem.A, basis, groups);
}

std::unique_ptr<Preconditioner> make_precond(const SolveConfig& cfg, const SparseMatrix& A,
                                             const IndexSets& dd_groups) {
    PrecondOptions opts;
    opts.omega = cfg.omega;
    opts.overlap = cfg.overlap;
    if (parse_precond(cfg.precond) == PrecondKind::asm_overlap) opts.subdomains = dd_groups;
    return build_preconditioner(A, parse_precond(cfg.precond), opts);
}

Vector make_guess(const SolveConfig& cfg, std::size_t n, std::uint64_t guess_seed) {
    if (cfg.guess == "zeros") return Vector(n, 0.0);
    Rng rng(guess_seed);
    Vector u = rng.normal_vector(n);
    const double nrm = norm2(u);
    if (nrm > 0.0) scale(u, 1.0 / nrm);
    return u;
}

SolveOptions solver_options(const SolveConfig& cfg) {
    SolveOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.max_iter = cfg.max_iter;
    return opts;
}

struct RunResult {
    bool converged = false;
    double iterations = 0.0;  // per-step mean for heat runs
    SolveReport last_report;
};

// One repetition: a fresh instance (or heat march), grouping, deflation,
// preconditioner, solve.
RunResult run_once(const SolveConfig& cfg, const DeepONetModel* model, std::uint64_t rep) {
    const std::uint64_t instance_seed = mix_seed(cfg.seed, rep, 1);
    const std::uint64_t basis_seed = mix_seed(cfg.seed, rep, 2);
    const std::uint64_t guess_seed = mix_seed(cfg.seed, rep, 3);
    const std::uint64_t group_seed = mix_seed(cfg.seed, rep, 4);

    RunResult out;
    if (cfg.problem != "heat") {
        ProblemInstance inst = make_instance(cfg, model, instance_seed);
        const IndexSets dd = partition_graph(inst.problem.A, spatial_coords(inst.problem), cfg.S);
        const IndexSets groups = make_groups(cfg, inst, model, group_seed);
        const auto M = make_precond(cfg, inst.problem.A, dd);
        const auto D = make_deflation(cfg, inst, model, groups, basis_seed);
        const Vector u00 = make_guess(cfg, inst.problem.A.n, guess_seed);
        out.last_report = solve(inst.problem.A, inst.problem.f, u00, *M,
                                D ? &*D : nullptr, solver_options(cfg));
        out.converged = out.last_report.converged;
        out.iterations = static_cast<double>(out.last_report.iterations);
        return out;
    }

    // Heat: march with a fixed diffusivity per repetition; mean iterations
    // over the steps.
    Rng krng(instance_seed);
    const double K = krng.uniform(1.0, 2.0);
    const Grid2D grid = Grid2D::unit_square(cfg.n);
    Vector u = heat_initial_condition(grid);
    double iter_sum = 0.0;
    bool all_ok = true;
    for (std::size_t step = 0; step < cfg.heat_steps; ++step) {
        const double t = static_cast<double>(step + 1) * cfg.heat_dt;
        ProblemInstance inst = make_heat_step_instance(grid, K, cfg.heat_dt, t, u);
        const IndexSets dd = partition_graph(inst.problem.A, grid.node_coords(), cfg.S);
        const IndexSets groups = make_groups(cfg, inst, model, group_seed);
        const auto M = make_precond(cfg, inst.problem.A, dd);
        const auto D = make_deflation(cfg, inst, model, groups, mix_seed(basis_seed, step, 5));
        const Vector u00 = make_guess(cfg, inst.problem.A.n, mix_seed(guess_seed, step, 6));
        out.last_report = solve(inst.problem.A, inst.problem.f, u00, *M,
                                D ? &*D : nullptr, solver_options(cfg));
        all_ok = all_ok && out.last_report.converged;
        iter_sum += static_cast<double>(out.last_report.iterations);
        u = out.last_report.u;
    }
    out.converged = all_ok;
    out.iterations = iter_sum / static_cast<double>(cfg.heat_steps);
    return out;
}

std::string format_double(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

int cmd_gen_data(const std::string& problem, std::size_t n, std::size_t ns, std::size_t sensors,
                 std::size_t steps, double dt, std::uint64_t seed, const std::string& out_path) {
    Dataset data;
    if (problem == "poisson1d") {
        data = gen_poisson1d_dataset(n, sensors, ns, seed);
    } else if (problem == "darcy") {
        data = gen_darcy_dataset(n, static_cast<std::size_t>(std::lround(std::sqrt(double(sensors)))),
                                 ns, seed);
    } else if (problem == "jumpdarcy") {
        data = gen_jumpdarcy_dataset(n, ns, seed);
    } else if (problem == "heat") {
        data = gen_heat_dataset(n, ns, steps, dt, seed);
    } else {
        throw CLI::ValidationError("--problem", "unknown problem '" + problem + "'");
    }
    save_dataset(data, out_path);
    std::printf("wrote %s: %zu samples, %zu coordinate sets\n", out_path.c_str(),
                data.samples.size(), data.coord_sets.size());
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& out_path,
              const std::string& resume_path, const TrainOptions& topts, const ArchOptions& arch) {
    const Dataset data = load_dataset(data_path);
    DeepONetModel model = resume_path.empty() ? make_model(data, arch) : load_model(resume_path);
    const TrainResult res = train(model, data, topts);
    save_model(model, out_path);

    const std::string loss_path = out_path + ".loss.csv";
    std::ofstream loss(loss_path);
    loss << "epoch,train_loss,validation_loss\n";
    loss.precision(17);
    for (std::size_t e = 0; e < res.loss_history.size(); ++e)
        loss << e << "," << res.loss_history[e] << "," << res.validation_history[e] << "\n";
    std::printf("wrote %s (best validation %.6e at epoch %zu) and %s\n", out_path.c_str(),
                res.best_validation, res.best_epoch, loss_path.c_str());
    return 0;
}

int cmd_solve(const SolveConfig& cfg, const std::string& out_path,
              const std::string& residual_csv) {
    validate_config(cfg);
    std::optional<DeepONetModel> model;
    if (!cfg.model_path.empty()) model = load_model(cfg.model_path);
    const RunResult run = run_once(cfg, model ? &*model : nullptr, 0);

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << run.last_report.to_json() << "\n";
    }
    if (!residual_csv.empty()) run.last_report.write_residual_csv(residual_csv);
    std::printf("%s: %s after %s iterations (final rel residual %.3e)\n", cfg.problem.c_str(),
                run.converged ? "converged" : "did not converge",
                format_double(run.iterations, cfg.problem == "heat" ? 2 : 0).c_str(),
                run.last_report.final_rel_residual);
    return run.converged ? 0 : kExitNumerical;
}

int cmd_bench(SolveConfig cfg, const std::vector<std::string>& deflations,
              const std::vector<std::size_t>& S_list, const std::vector<std::size_t>& k_list,
              std::size_t reps, const std::string& out_path) {
    std::optional<DeepONetModel> model;
    if (!cfg.model_path.empty()) model = load_model(cfg.model_path);

    std::ostringstream csv;
    csv << "problem,n,precond,grouping,deflation,S,k,reps,mean_iters,theta,runs\n";

    // Baseline per S for the theta column: mean undeflated iterations
    // under the same preconditioner configuration.
    std::map<std::size_t, double> baseline_mean;

    for (const std::string& defl : deflations) {
        for (std::size_t S : S_list) {
            for (std::size_t k : k_list) {
                SolveConfig row_cfg = cfg;
                row_cfg.deflation = defl;
                row_cfg.S = S;
                row_cfg.k = k;
                validate_config(row_cfg);

                std::vector<double> iters;
                bool all_ok = true;
                for (std::size_t rep = 0; rep < reps; ++rep) {
                    try {
                        const RunResult run = run_once(row_cfg, model ? &*model : nullptr, rep);
                        if (!run.converged) all_ok = false;
                        iters.push_back(run.converged ? run.iterations : -1.0);
                    } catch (const std::exception& e) {
                        all_ok = false;
                        iters.push_back(-1.0);
                        std::fprintf(stderr, "bench cell %s S=%zu k=%zu rep %zu failed: %s\n",
                                     defl.c_str(), S, k, rep, e.what());
                    }
                }

                double mean = 0.0;
                for (double v : iters) mean += std::max(v, 0.0);
                mean /= static_cast<double>(reps);

                std::string theta_s = "-";
                if (defl == "none") {
                    if (all_ok) baseline_mean[S] = mean;
                } else if (all_ok && baseline_mean.count(S) != 0 && baseline_mean[S] > 0.0) {
                    const double theta =
                        (baseline_mean[S] - mean) / (static_cast<double>(k) * baseline_mean[S]);
                    theta_s = format_double(theta, 6);
                }

                csv << cfg.problem << "," << cfg.n << "," << cfg.precond << "," << cfg.grouping
                    << "," << defl << "," << S << "," << k << "," << reps << ","
                    << (all_ok ? format_double(mean) : "-") << "," << theta_s << ",";
                for (std::size_t r = 0; r < iters.size(); ++r) {
                    if (r) csv << "|";
                    csv << (iters[r] < 0.0 ? std::string("-") : format_double(iters[r], 2));
                }
                csv << "\n";

                if (defl == "none") break;  // k sweep is meaningless without deflation
            }
        }
    }

    std::ofstream out(out_path);
    out << csv.str();
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_spectrum(const std::string& model_path, std::size_t coords_n, const SolveConfig& cfg,
                 bool with_problem, const std::string& out_path) {
    std::ofstream out(out_path);
    if (!model_path.empty() && !with_problem) {
        const DeepONetModel model = load_model(model_path);
        DenseMatrix coords(coords_n, model.trunk_input_dim());
        // Diagonal line through the domain (and mid-horizon time).
        for (std::size_t i = 0; i < coords_n; ++i) {
            const double x = static_cast<double>(i + 1) / static_cast<double>(coords_n + 1);
            coords(i, 0) = x;
            if (model.trunk_input_dim() > 1) coords(i, 1) = 1.0 - x;
            if (model.trunk_input_dim() > 2) coords(i, 2) = 0.5;
        }
        const Vector sigma = trunk_singular_values(model, coords);
        out << "mode,sigma\n";
        out.precision(17);
        for (std::size_t q = 0; q < sigma.size(); ++q) out << q << "," << sigma[q] << "\n";
        std::printf("wrote %s (%zu singular values)\n", out_path.c_str(), sigma.size());
        return 0;
    }

    validate_config(cfg);
    std::optional<DeepONetModel> model;
    if (!cfg.model_path.empty()) model = load_model(cfg.model_path);
    ProblemInstance inst = make_instance(cfg, model ? &*model : nullptr, mix_seed(cfg.seed, 0, 1));
    if (inst.problem.A.n > 2500)
        throw CLI::ValidationError("--n", "dense spectrum path limited to 2500 dofs");
    const IndexSets dd = partition_graph(inst.problem.A, spatial_coords(inst.problem), cfg.S);
    const auto M = make_precond(cfg, inst.problem.A, dd);

    Vector lambda;
    if (cfg.deflation == "none") {
        lambda = preconditioned_spectrum(inst.problem.A, *M);
    } else {
        const IndexSets groups =
            make_groups(cfg, inst, model ? &*model : nullptr, mix_seed(cfg.seed, 0, 4));
        const auto D = make_deflation(cfg, inst, model ? &*model : nullptr, groups,
                                      mix_seed(cfg.seed, 0, 2));
        lambda = deflated_spectrum(inst.problem.A, *M, D->dense_P());
    }
    out << "index,lambda\n";
    out.precision(17);
    for (std::size_t i = 0; i < lambda.size(); ++i) out << i << "," << lambda[i] << "\n";
    std::printf("wrote %s (%zu eigenvalues)\n", out_path.c_str(), lambda.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deflated PCG with operator-learning deflation operators"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML/INI file");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a training dataset");
    std::string g_problem = "poisson1d", g_out = "dataset.json";
    std::size_t g_n = 64, g_ns = 200, g_sensors = 32, g_steps = 20;
    double g_dt = 0.02;
    std::uint64_t g_seed = 1;
    gen->add_option("--problem", g_problem, "poisson1d | darcy | jumpdarcy | heat")
        ->check(CLI::IsMember({"poisson1d", "darcy", "jumpdarcy", "heat"}));
    gen->add_option("--n", g_n, "grid nodes per axis (coarse mesh)");
    gen->add_option("--ns", g_ns, "samples (heat: runs)")->check(CLI::PositiveNumber);
    gen->add_option("--sensors", g_sensors, "sensor count (darcy: lattice points)");
    gen->add_option("--steps", g_steps, "heat: steps per run");
    gen->add_option("--dt", g_dt, "heat: time-step size");
    gen->add_option("--seed", g_seed, "dataset seed");
    gen->add_option("--out", g_out, "output dataset file");

    // train
    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    std::string t_data, t_out = "model.json", t_resume;
    TrainOptions topts;
    ArchOptions arch;
    tr->add_option("--data", t_data, "dataset file")->required();
    tr->add_option("--out", t_out, "output model file");
    tr->add_option("--resume", t_resume, "continue from a saved model");
    tr->add_option("--epochs", topts.max_epochs, "epoch cap");
    tr->add_option("--lr", topts.lr, "Adam learning rate");
    tr->add_option("--batch", topts.batch, "batch size");
    tr->add_option("--patience", topts.patience, "early-stop patience (epochs)");
    tr->add_option("--seed", topts.seed, "training seed");
    tr->add_option("--p", arch.p, "mode count");
    tr->add_option("--hidden", arch.hidden, "hidden width");
    tr->add_flag("--verbose", topts.verbose, "log progress to stderr");

    // solve
    auto* so = app.add_subcommand("solve", "solve one sampled system");
    SolveConfig s_cfg;
    std::string s_out = "report.json", s_res_csv;
    add_solve_flags(so, s_cfg);
    so->add_option("--out", s_out, "solve report (JSON)");
    so->add_option("--residual-csv", s_res_csv, "residual history CSV");

    // bench
    auto* be = app.add_subcommand("bench", "sweep configurations, emit CSV");
    SolveConfig b_cfg;
    std::string b_out = "bench.csv";
    std::vector<std::string> b_defl{"none", "nico", "tb"};
    std::vector<std::size_t> b_S{4};
    std::vector<std::size_t> b_k{5};
    std::size_t b_reps = 10;
    add_solve_flags(be, b_cfg);
    be->add_option("--deflations", b_defl, "deflation sweep list")->delimiter(',');
    be->add_option("--S-list", b_S, "group count sweep list")->delimiter(',');
    be->add_option("--k-list", b_k, "deflation count sweep list")->delimiter(',');
    be->add_option("--reps", b_reps, "repetitions per cell")->check(CLI::PositiveNumber);
    be->add_option("--out", b_out, "output CSV");

    // spectrum
    auto* sp = app.add_subcommand("spectrum", "trunk singular values / deflated spectra");
    SolveConfig p_cfg;
    std::string p_model, p_out = "spectrum.csv";
    std::size_t p_coords = 128;
    bool p_with_problem = false;
    add_solve_flags(sp, p_cfg);
    sp->add_option("--trunk-model", p_model, "dump trunk singular values of this model");
    sp->add_option("--coords-n", p_coords, "evaluation points for the trunk spectrum");
    sp->add_flag("--operator", p_with_problem, "dense spectrum of the projected operator");
    sp->add_option("--out", p_out, "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(g_problem, g_n, g_ns, g_sensors, g_steps, g_dt, g_seed, g_out);
        if (tr->parsed()) return cmd_train(t_data, t_out, t_resume, topts, arch);
        if (so->parsed()) return cmd_solve(s_cfg, s_out, s_res_csv);
        if (be->parsed()) return cmd_bench(b_cfg, b_defl, b_S, b_k, b_reps, b_out);
        if (sp->parsed()) return cmd_spectrum(p_model, p_coords, p_cfg, p_with_problem, p_out);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
