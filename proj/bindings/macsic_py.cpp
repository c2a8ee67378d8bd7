#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "macsic/poweropt.hpp"
#include "macsic/simulator.hpp"
#include "macsic/version.hpp"

namespace py = pybind11;
using namespace macsic;

namespace {

SimConfig make_sim_config(int users, const CodeSpec& code,
                          const PowerProfile& profile, int trials,
                          int max_iterations, double eta_tol,
                          std::uint64_t seed, int threads,
                          bool orthogonal_codebooks, bool renormalize) {
    SimConfig cfg;
    cfg.users = users;
    cfg.code = code;
    cfg.profile = profile;
    cfg.trials = trials;
    cfg.max_iterations = max_iterations;
    cfg.eta_tol = eta_tol;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.orthogonal_codebooks = orthogonal_codebooks;
    cfg.renormalize = renormalize;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_macsic, m) {
    m.doc() = "Asymptotics, power optimization and simulation of iterative "
              "soft interference cancellation on the Gaussian MAC";
    m.attr("__version__") = kVersion;

    py::register_exception<envelope_error>(m, "EnvelopeError");

    py::class_<QuadratureRule>(m, "QuadratureRule")
        .def(py::init<std::vector<double>, std::vector<double>>(),
             py::arg("nodes"), py::arg("weights"))
        .def_readonly("nodes", &QuadratureRule::nodes)
        .def_readonly("weights", &QuadratureRule::weights)
        .def("__len__", &QuadratureRule::size);
    m.def("gauss_hermite", &gauss_hermite, py::arg("n"));

    m.def("gaussian_q", &gaussian_q, py::arg("x"));
    m.def("log_gaussian_q", &log_gaussian_q, py::arg("x"));
    m.def("gaussian_q_inv", &gaussian_q_inv, py::arg("p"));
    m.def("q_pow", &q_pow, py::arg("x"), py::arg("a"));
    m.def("log_q_pow", &log_q_pow, py::arg("x"), py::arg("a"));
    m.def("marcum_q", &marcum_q, py::arg("order"), py::arg("b"), py::arg("c"));
    m.def("binary_entropy", &binary_entropy, py::arg("p"));

    py::class_<CodeSpec>(m, "CodeSpec")
        .def(py::init<int, double>(), py::arg("bits"), py::arg("dims"))
        .def_readonly("bits", &CodeSpec::bits)
        .def_readonly("dims", &CodeSpec::dims)
        .def_property_readonly("rate", &CodeSpec::rate);

    m.def("block_error_prob", &block_error_prob, py::arg("code"),
          py::arg("effective_snr"), py::arg("rule"));
    m.def("posterior_error_prob", &posterior_error_prob, py::arg("code"),
          py::arg("effective_snr"), py::arg("x"));
    m.def("residual_fraction_upper", &residual_fraction_upper, py::arg("code"),
          py::arg("effective_snr"), py::arg("rule"));
    m.def("residual_fraction_lower", &residual_fraction_lower, py::arg("code"),
          py::arg("effective_snr"), py::arg("rule"));
    m.def("single_user_pe", &single_user_pe, py::arg("bits"), py::arg("ebno"),
          py::arg("rule"));
    m.def("pe_lower_bound", &pe_lower_bound, py::arg("bits"), py::arg("ebno"));
    m.def("conditional_pe_finite", &conditional_pe_finite, py::arg("users"),
          py::arg("code"), py::arg("power"), py::arg("r_norm"),
          py::arg("z_norm"));

    py::class_<PowerGroup>(m, "PowerGroup")
        .def(py::init<double, double>(), py::arg("fraction"), py::arg("power"))
        .def_readwrite("fraction", &PowerGroup::fraction)
        .def_readwrite("power", &PowerGroup::power);
    py::class_<PowerProfile>(m, "PowerProfile")
        .def(py::init([](const std::vector<std::pair<double, double>>& groups) {
                 std::vector<PowerGroup> g;
                 for (const auto& [frac, pow] : groups) g.push_back({frac, pow});
                 return PowerProfile(std::move(g));
             }),
             py::arg("groups"))
        .def_property_readonly("groups",
                               [](const PowerProfile& p) {
                                   std::vector<std::pair<double, double>> out;
                                   for (const auto& g : p.groups)
                                       out.emplace_back(g.fraction, g.power);
                                   return out;
                               })
        .def("aggregate_power", &PowerProfile::aggregate_power);

    py::enum_<BoundKind>(m, "BoundKind")
        .value("UpperResidual", BoundKind::UpperResidual)
        .value("LowerResidual", BoundKind::LowerResidual);

    py::class_<EvolutionState>(m, "EvolutionState")
        .def_readonly("eta", &EvolutionState::eta)
        .def_readonly("residual_fractions", &EvolutionState::residual_fractions)
        .def_readonly("iteration", &EvolutionState::iteration);

    m.def("multiuser_efficiency",
          [](const PowerProfile& profile, const std::vector<double>& v) {
              return multiuser_efficiency(profile, v);
          },
          py::arg("profile"), py::arg("residual_fractions"));
    m.def(
        "evolve",
        [](const CodeSpec& code, const PowerProfile& profile,
           const QuadratureRule& rule, BoundKind bound, int max_iter,
           double tol) {
            return evolve(code, profile, rule, {bound, max_iter, tol});
        },
        py::arg("code"), py::arg("profile"), py::arg("rule"),
        py::arg("bound") = BoundKind::UpperResidual,
        py::arg("max_iter") = 10000, py::arg("tol") = 1e-9);
    m.def(
        "final_pe",
        [](const CodeSpec& code, const PowerProfile& profile,
           const QuadratureRule& rule, BoundKind bound, int max_iter,
           double tol) {
            return final_pe(code, profile, rule, {bound, max_iter, tol});
        },
        py::arg("code"), py::arg("profile"), py::arg("rule"),
        py::arg("bound") = BoundKind::UpperResidual,
        py::arg("max_iter") = 10000, py::arg("tol") = 1e-9);

    py::class_<FadingModel>(m, "FadingModel")
        .def(py::init<std::vector<double>, std::vector<double>>(),
             py::arg("weights"), py::arg("probabilities"))
        .def_static("inverse_square", &FadingModel::inverse_square,
                    py::arg("levels"))
        .def_readonly("weights", &FadingModel::weights)
        .def_readonly("probabilities", &FadingModel::probabilities)
        .def("mean_gain", &FadingModel::mean_gain);

    py::enum_<LpStatus>(m, "LpStatus")
        .value("Optimal", LpStatus::Optimal)
        .value("Infeasible", LpStatus::Infeasible)
        .value("Unbounded", LpStatus::Unbounded);
    py::class_<LpProblem>(m, "LpProblem")
        .def(py::init<>())
        .def_readwrite("objective", &LpProblem::objective)
        .def_readwrite("ineq_lhs", &LpProblem::ineq_lhs)
        .def_readwrite("ineq_rhs", &LpProblem::ineq_rhs)
        .def_readwrite("eq_lhs", &LpProblem::eq_lhs)
        .def_readwrite("eq_rhs", &LpProblem::eq_rhs);
    py::class_<LpSolution>(m, "LpSolution")
        .def_readonly("status", &LpSolution::status)
        .def_readonly("x", &LpSolution::x)
        .def_readonly("objective_value", &LpSolution::objective_value);
    m.def("simplex_solve", &simplex_solve, py::arg("lp"));

    py::class_<EtaGrid>(m, "EtaGrid")
        .def(py::init([](double lo, double hi, int points, double margin) {
                 EtaGrid g{lo, hi, points, margin};
                 g.validate();
                 return g;
             }),
             py::arg("lo"), py::arg("hi"), py::arg("points") = 256,
             py::arg("margin") = 1e-3)
        .def_readonly("lo", &EtaGrid::lo)
        .def_readonly("hi", &EtaGrid::hi)
        .def_readonly("points", &EtaGrid::points)
        .def_readonly("margin", &EtaGrid::margin)
        .def("values", &EtaGrid::values);
    m.def(
        "build_power_lp",
        [](const CodeSpec& code, const std::vector<double>& power_grid,
           const EtaGrid& grid, BoundKind bound, const QuadratureRule& rule,
           const FadingModel* fading,
           const std::optional<std::vector<double>>& objective_weights) {
            return build_power_lp(code, power_grid, grid, bound, rule, fading,
                                  objective_weights ? &*objective_weights
                                                    : nullptr);
        },
        py::arg("code"), py::arg("power_grid"), py::arg("grid"),
        py::arg("bound"), py::arg("rule"), py::arg("fading") = nullptr,
        py::arg("objective_weights") = std::nullopt);

    py::class_<ProfileEntry>(m, "ProfileEntry")
        .def_readonly("fraction", &ProfileEntry::fraction)
        .def_readonly("power", &ProfileEntry::power)
        .def_readonly("transmit_power", &ProfileEntry::transmit_power)
        .def_readonly("fade_level", &ProfileEntry::fade_level);
    py::class_<OptimizeResult>(m, "OptimizeResult")
        .def_readonly("feasible", &OptimizeResult::feasible)
        .def_readonly("total_power", &OptimizeResult::total_power)
        .def_readonly("achieved_pe", &OptimizeResult::achieved_pe)
        .def_readonly("eta_hi", &OptimizeResult::eta_hi)
        .def_readonly("entries", &OptimizeResult::entries)
        .def("profile", &OptimizeResult::profile);

    m.def(
        "optimize_profile",
        [](const CodeSpec& code, double target_pe,
           const std::vector<double>& power_grid, BoundKind bound,
           const QuadratureRule& rule, const FadingModel* fading,
           double margin, int eta_points, int nest_steps,
           bool single_group_refine) {
            OptimizeOptions opts;
            opts.margin = margin;
            opts.eta_points = eta_points;
            opts.nest_steps = nest_steps;
            opts.single_group_refine = single_group_refine;
            return optimize_profile(code, target_pe, power_grid, bound, rule,
                                    fading, opts);
        },
        py::arg("code"), py::arg("target_pe"), py::arg("power_grid"),
        py::arg("bound"), py::arg("rule"), py::arg("fading") = nullptr,
        py::arg("margin") = 1e-3, py::arg("eta_points") = 256,
        py::arg("nest_steps") = 30, py::arg("single_group_refine") = true);
    py::class_<TradeoffPoint>(m, "TradeoffPoint")
        .def_readonly("ebno_db", &TradeoffPoint::ebno_db)
        .def_readonly("attained", &TradeoffPoint::attained)
        .def_readonly("rate", &TradeoffPoint::rate)
        .def_readonly("ebno_db_inner", &TradeoffPoint::ebno_db_inner)
        .def_readonly("ebno_db_outer", &TradeoffPoint::ebno_db_outer)
        .def_readonly("ebno_db_fading_bound",
                      &TradeoffPoint::ebno_db_fading_bound);
    m.def(
        "tradeoff_sweep",
        [](int bits, const std::vector<double>& ebno_db_grid, double target_pe,
           const QuadratureRule& rule, const FadingModel* fading,
           double rate_lo, double rate_hi, int rate_bisect_steps,
           int power_grid_size, double power_span_db, int nest_steps,
           int eta_points, int threads) {
            TradeoffOptions opts;
            opts.rate_lo = rate_lo;
            opts.rate_hi = rate_hi;
            opts.rate_bisect_steps = rate_bisect_steps;
            opts.power_grid_size = power_grid_size;
            opts.power_span_db = power_span_db;
            opts.optimize.nest_steps = nest_steps;
            opts.optimize.eta_points = eta_points;
            opts.threads = threads;
            return tradeoff_sweep(bits, ebno_db_grid, target_pe, rule, fading,
                                  opts);
        },
        py::arg("bits"), py::arg("ebno_db_grid"), py::arg("target_pe"),
        py::arg("rule"), py::arg("fading") = nullptr, py::arg("rate_lo") = 1e-2,
        py::arg("rate_hi") = 32.0, py::arg("rate_bisect_steps") = 12,
        py::arg("power_grid_size") = 128, py::arg("power_span_db") = 30.0,
        py::arg("nest_steps") = 18, py::arg("eta_points") = 256,
        py::arg("threads") = 1);
    m.def("default_power_grid", &default_power_grid, py::arg("code"),
          py::arg("target_pe"), py::arg("rule"), py::arg("count") = 128,
          py::arg("span_db") = 30.0);
    m.def("threshold_snr", &threshold_snr, py::arg("code"),
          py::arg("target_pe"), py::arg("rule"));
    m.def("fading_outer_bound", &fading_outer_bound, py::arg("rate"),
          py::arg("bits"), py::arg("pe"), py::arg("fading"));
    m.def("fading_outer_bound_a", &fading_outer_bound_a, py::arg("rate"),
          py::arg("a"), py::arg("fading"));

    py::class_<SimReport>(m, "SimReport")
        .def_readonly("error_rate", &SimReport::error_rate)
        .def_readonly("errors", &SimReport::errors)
        .def_readonly("decisions", &SimReport::decisions)
        .def_readonly("eta_trajectory", &SimReport::eta_trajectory)
        .def_readonly("residual_trajectory", &SimReport::residual_trajectory)
        .def_readonly("iterations_used", &SimReport::iterations_used);
    m.def("run_simulation",
          [](int users, const CodeSpec& code, const PowerProfile& profile,
             int trials, int max_iterations, double eta_tol,
             std::uint64_t seed, int threads, bool orthogonal_codebooks,
             bool renormalize) {
              return run_simulation(make_sim_config(
                  users, code, profile, trials, max_iterations, eta_tol, seed,
                  threads, orthogonal_codebooks, renormalize));
          },
          py::arg("users"), py::arg("code"), py::arg("profile"),
          py::arg("trials"), py::arg("max_iterations") = 30,
          py::arg("eta_tol") = 1e-4, py::arg("seed") = 0,
          py::arg("threads") = 1, py::arg("orthogonal_codebooks") = false,
          py::arg("renormalize") = true);
    m.def("generate_codebook", &generate_codebook, py::arg("seed"),
          py::arg("user"), py::arg("code"), py::arg("group_power"),
          py::arg("users"));
    py::class_<DecodeResult>(m, "DecodeResult")
        .def_readonly("index", &DecodeResult::index)
        .def_readonly("statistic", &DecodeResult::statistic);
    m.def("decode",
          [](const std::vector<double>& residual,
             const std::vector<double>& codebook, int codewords) {
              return decode(residual, codebook, codewords);
          },
          py::arg("residual"), py::arg("codebook"), py::arg("codewords"));

    py::class_<SimState>(m, "SimState")
        .def_readonly("codebook_seed", &SimState::codebook_seed)
        .def_readonly("received", &SimState::received)
        .def_readonly("sent", &SimState::sent)
        .def_readonly("decisions", &SimState::decisions)
        .def_readonly("statistics", &SimState::statistics)
        .def_readwrite("error_probs", &SimState::error_probs)
        .def_readonly("residual_fractions", &SimState::residual_fractions)
        .def_readonly("interference_power", &SimState::interference_power)
        .def_readonly("iteration", &SimState::iteration);
    m.def("initial_sim_state",
          [](int users, const CodeSpec& code, const PowerProfile& profile,
             std::uint64_t trial_seed) {
              return initial_sim_state(
                  make_sim_config(users, code, profile, 1, 30, 1e-4, 0, 1,
                                  false, true),
                  trial_seed);
          },
          py::arg("users"), py::arg("code"), py::arg("profile"),
          py::arg("trial_seed"));
    m.def("soft_cancel_iteration",
          [](const SimState& state, int users, const CodeSpec& code,
             const PowerProfile& profile, bool renormalize) {
              return soft_cancel_iteration(
                  state, make_sim_config(users, code, profile, 1, 30, 1e-4, 0,
                                         1, false, renormalize));
          },
          py::arg("state"), py::arg("users"), py::arg("code"),
          py::arg("profile"), py::arg("renormalize") = true);
}
