// ksparse command-line tool: solve / cv / synth / validate.
//
// Every output file embeds the semantic configuration (paths, K, schedule,
// seeds, fold plan) so a run can be replayed byte-identically; execution
// details like the worker count never enter the outputs.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksparse/baselines.hpp"
#include "ksparse/cv.hpp"
#include "ksparse/io.hpp"
#include "ksparse/linalg.hpp"
#include "ksparse/sampler.hpp"
#include "ksparse/synthetic.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace ksparse;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// "loo" or "k:<n>"
struct FoldSpec {
    bool loo = true;
    int k = 0;
};

FoldSpec parse_folds(const std::string& text) {
    if (text == "loo") return {};
    if (text.rfind("k:", 0) == 0) {
        FoldSpec spec;
        spec.loo = false;
        try {
            spec.k = std::stoi(text.substr(2));
        } catch (const std::exception&) {
            throw UsageError("cannot parse fold count in --folds '" + text + "'");
        }
        if (spec.k < 2) throw UsageError("--folds k:<n> needs n >= 2");
        return spec;
    }
    throw UsageError("--folds must be 'loo' or 'k:<n>', got '" + text + "'");
}

// "a", "a,b,c", "a:b" or "a:b:step"
std::vector<int> parse_k_set(const std::string& text) {
    std::vector<int> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string item =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (item.empty()) throw UsageError("empty item in --k-set '" + text + "'");
        const std::size_t colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                values.push_back(std::stoi(item));
            } else {
                const std::size_t colon2 = item.find(':', colon + 1);
                const int lo = std::stoi(item.substr(0, colon));
                const int hi = std::stoi(item.substr(
                    colon + 1, colon2 == std::string::npos ? std::string::npos : colon2 - colon - 1));
                const int step = colon2 == std::string::npos ? 1 : std::stoi(item.substr(colon2 + 1));
                if (step < 1) throw UsageError("--k-set range step must be >= 1");
                for (int k = lo; k <= hi; k += step) values.push_back(k);
            }
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            throw UsageError("cannot parse --k-set item '" + item + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (values.empty()) throw UsageError("--k-set is empty");
    return values;
}

struct CommonOpts {
    std::string input;
    std::string response_col = "y";
    bool standardize = false;
    bool scale = false;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = ".";
    Schedule schedule;
    int restarts = 1;
};

void add_schedule_flags(CLI::App* cmd, Schedule& schedule) {
    cmd->add_option("--beta0", schedule.beta0, "Initial inverse temperature")
        ->capture_default_str();
    cmd->add_option("--ratio", schedule.ratio, "Geometric ratio r of the ladder")
        ->capture_default_str();
    cmd->add_option("--stages", schedule.stages, "Number of inverse-temperature stages")
        ->capture_default_str();
    cmd->add_option("--sweeps", schedule.sweeps_per_stage, "Sweeps per stage (flips per column)")
        ->capture_default_str();
}

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--input", opts.input, "Instance CSV")->required();
    cmd->add_option("--response-col", opts.response_col,
                    "Response column (header name or 0-based position)")
        ->capture_default_str();
    cmd->add_flag("--standardize", opts.standardize, "Center y and every column of A");
    cmd->add_flag("--scale", opts.scale, "Also scale columns of A to unit sample variance");
    cmd->add_option("--seed", opts.seed, "Base seed")->capture_default_str();
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = all available)")
        ->capture_default_str();
    cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
    add_schedule_flags(cmd, opts.schedule);
    cmd->add_option("--restarts", opts.restarts, "Independent SA restarts")
        ->capture_default_str();
}

LoadedInstance load_for(const CommonOpts& opts) {
    LoadedInstance loaded =
        load_instance(fs::path(opts.input), opts.response_col, opts.standardize, opts.scale);
    std::cerr << "loaded " << opts.input << ": M=" << loaded.instance.m()
              << " N=" << loaded.instance.n() << "\n";
    return loaded;
}

json schedule_to_json(const Schedule& schedule) {
    return json{{"beta0", schedule.beta0},
                {"ratio", schedule.ratio},
                {"stages", schedule.stages},
                {"sweeps_per_stage", schedule.sweeps_per_stage}};
}

json common_config_json(const CommonOpts& opts) {
    return json{{"input", opts.input},
                {"response_col", opts.response_col},
                {"standardize", opts.standardize},
                {"scale", opts.scale},
                {"seed", opts.seed},
                {"schedule", schedule_to_json(opts.schedule)},
                {"restarts", opts.restarts}};
}

std::string trace_csv(const SaResult& result) {
    std::string csv = "beta,temperature,eps\n";
    for (const auto& [beta, eps] : result.trace) {
        csv += format_double(beta);
        csv += ',';
        csv += format_double(beta > 0.0 ? 1.0 / beta : std::numeric_limits<double>::infinity());
        csv += ',';
        csv += format_double(eps);
        csv += '\n';
    }
    return csv;
}

int cmd_solve(const CommonOpts& opts, int k) {
    opts.schedule.validate();
    if (opts.restarts < 1) throw UsageError("--restarts must be >= 1");
    const LoadedInstance loaded = load_for(opts);
    const Instance& instance = loaded.instance;
    if (k < 1) throw UsageError("--k must be >= 1");
    if (k > instance.m())
        throw UsageError("K=" + std::to_string(k) + " violates K <= M (M=" +
                         std::to_string(instance.m()) + " rows)");
    if (k > instance.n() - 1)
        throw UsageError("K=" + std::to_string(k) + " violates K <= N-1 (N=" +
                         std::to_string(instance.n()) + " columns)");

    // Restarts are independent chains on their own streams; run them on the
    // worker pool and keep the deterministic (stream-ordered) best.
    std::vector<SaResult> runs(static_cast<std::size_t>(opts.restarts));
    const int n_restarts = opts.restarts;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(opts.threads > 0 ? opts.threads : omp_get_max_threads())
#endif
    for (int r = 0; r < n_restarts; ++r) {
        Philox rng(opts.seed, static_cast<std::uint64_t>(r));
        runs[static_cast<std::size_t>(r)] =
            anneal(instance, k, opts.schedule, std::nullopt, rng);
    }
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].best_rss < runs[best].best_rss) best = r;
    const SaResult& winner = runs[best];
    const LsState fit = solve_restricted(instance, winner.best_support);

    const OmpResult greedy = omp_fit(instance, k);

    json restarts = json::array();
    for (std::size_t r = 0; r < runs.size(); ++r)
        restarts.push_back(json{{"restart", r},
                                {"best_rss", runs[r].best_rss},
                                {"best_support", support_to_json(runs[r].best_support)},
                                {"accepted", runs[r].accepted},
                                {"proposed", runs[r].proposed}});

    const Eigen::VectorXd fit_coeffs = fit.coeffs();
    const std::vector<double> coeffs(fit_coeffs.data(), fit_coeffs.data() + fit_coeffs.size());
    json doc{{"command", "solve"},
             {"config", common_config_json(opts)},
             {"k", k},
             {"instance", json{{"m", instance.m()}, {"n", instance.n()}}},
             {"result",
              json{{"best_support", support_to_json(winner.best_support)},
                   {"coefficients", coeffs},
                   {"rss", fit.rss()},
                   {"eps", fit.rss_per_component()},
                   {"final_support", support_to_json(winner.final_support)},
                   {"final_rss", winner.final_rss},
                   {"restarts", std::move(restarts)}}},
             {"omp", json{{"support", support_to_json(greedy.support)},
                          {"rss", greedy.state.rss()},
                          {"skipped_cols", greedy.skipped_cols}}}};

    const fs::path out(opts.out_dir);
    write_json_file(out / "solution.json", doc);
    write_text_file(out / "trace.csv", trace_csv(winner));
    std::cout << "best RSS " << format_double(fit.rss()) << " (eps "
              << format_double(fit.rss_per_component()) << ") at K=" << k << "; OMP RSS "
              << format_double(greedy.state.rss()) << "\n";
    return 0;
}

int cmd_cv(const CommonOpts& opts, const std::string& k_set_text, const std::string& folds_text,
           int top) {
    opts.schedule.validate();
    if (opts.restarts < 1) throw UsageError("--restarts must be >= 1");
    const std::vector<int> k_values = parse_k_set(k_set_text);
    const FoldSpec fold_spec = parse_folds(folds_text);
    const LoadedInstance loaded = load_for(opts);
    const Instance& instance = loaded.instance;

    const FoldPlan plan = fold_spec.loo
                              ? make_loo_folds(instance.m())
                              : make_kfold_folds(instance.m(), fold_spec.k, opts.seed);
    const int limit = std::min(plan.min_train_rows(), instance.n() - 1);
    for (int k : k_values)
        if (k < 1 || k > limit)
            throw UsageError("K=" + std::to_string(k) +
                             " violates 1 <= K <= min(train rows, N-1) = " +
                             std::to_string(limit));

    const CvReport report =
        sweep_k(instance, k_values, opts.schedule, plan, opts.seed, opts.restarts, opts.threads);

    json config = common_config_json(opts);
    config["k_set"] = k_values;
    config["folds"] = folds_text;
    json doc{{"command", "cv"},
             {"config", std::move(config)},
             {"instance", json{{"m", instance.m()}, {"n", instance.n()}}},
             {"report", cv_report_to_json(report)}};

    std::string looe_csv = "k,looe\n";
    for (int k : k_values) {
        looe_csv += std::to_string(k);
        looe_csv += ',';
        looe_csv += format_double(report.looe.at(k));
        looe_csv += '\n';
    }

    // Top selected variables per K, count descending then index ascending.
    std::string freq_csv = "k,rank,variable,name,count\n";
    for (int k : k_values) {
        std::vector<std::pair<int, int>> items(report.frequencies.at(k).begin(),
                                               report.frequencies.at(k).end());
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        const int rows = std::min<int>(top, static_cast<int>(items.size()));
        for (int r = 0; r < rows; ++r) {
            const auto [variable, count] = items[static_cast<std::size_t>(r)];
            freq_csv += std::to_string(k);
            freq_csv += ',';
            freq_csv += std::to_string(r + 1);
            freq_csv += ',';
            freq_csv += std::to_string(variable);
            freq_csv += ',';
            freq_csv += loaded.column_names[static_cast<std::size_t>(variable)];
            freq_csv += ',';
            freq_csv += std::to_string(count);
            freq_csv += '\n';
        }
    }

    const fs::path out(opts.out_dir);
    write_json_file(out / "cv_report.json", doc);
    write_text_file(out / "looe.csv", looe_csv);
    write_text_file(out / "frequencies.csv", freq_csv);

    std::cout << "best K = " << report.best_k << " (looe "
              << format_double(report.looe.at(report.best_k)) << ")\n";
    for (const auto& [k, failed] : report.failed_folds)
        std::cerr << "warning: K=" << k << ": " << failed
                  << " fold(s) failed and were excluded from the average\n";
    return 0;
}

int cmd_synth(const SynthParams& params, const std::string& out_dir) {
    const PlantedInstance planted = generate_planted(params);
    std::vector<std::string> names(static_cast<std::size_t>(params.n));
    for (int i = 0; i < params.n; ++i) names[static_cast<std::size_t>(i)] = "x" + std::to_string(i);

    const fs::path out(out_dir);
    write_instance_csv(out / "instance.csv", planted.instance, names, "y");

    const std::vector<double> x0(planted.x0.data(), planted.x0.data() + planted.x0.size());
    json doc{{"command", "synth"},
             {"params", json{{"n", params.n},
                             {"alpha", params.alpha},
                             {"rho0", params.rho0},
                             {"sigma_x2", params.sigma_x2},
                             {"sigma_xi2", params.sigma_xi2},
                             {"seed", params.seed}}},
             {"m", planted.instance.m()},
             {"true_support", support_to_json(planted.true_support)},
             {"x0", x0}};
    write_json_file(out / "truth.json", doc);

    std::cout << "wrote " << (out / "instance.csv").string() << " (" << planted.instance.m()
              << " rows, " << params.n << " regressors), true support size "
              << planted.true_support.k() << "\n";
    return 0;
}

int cmd_validate(const CommonOpts& opts, int k, double beta, long steps, int trials,
                 double tv_tol, double opt_frac) {
    opts.schedule.validate();
    if (k < 1) throw UsageError("--k must be >= 1");
    if (steps < 1) throw UsageError("--steps must be >= 1");
    if (trials < 1) throw UsageError("--trials must be >= 1");
    const LoadedInstance loaded = load_for(opts);
    const Instance& instance = loaded.instance;
    if (k > std::min(instance.m(), instance.n() - 1))
        throw UsageError("K=" + std::to_string(k) + " violates K <= min(M, N-1)");

    // Equilibrium: empirical support frequencies at fixed beta against the
    // enumerated distribution.
    const BoltzmannTable table =
        enumerate_boltzmann(instance, k, beta, kEnumerationCap, opts.threads);
    Philox chain_rng(opts.seed, 100);
    LsState state = [&] {
        for (int attempt = 0; attempt < 100; ++attempt) {
            try {
                return solve_restricted(instance,
                                        Support(uniform_subset(instance.n(), k, chain_rng)));
            } catch (const RankDeficient&) {
            }
        }
        throw InitializationFailed("validate: no full-rank initial support in 100 draws");
    }();
    std::vector<long> visits(table.probabilities.size(), 0);
    long accepts_since_refresh = 0;
    for (long i = 0; i < steps; ++i) {
        auto result = metropolis_step(std::move(state), beta, instance, chain_rng);
        state = std::move(result.state);
        if (result.accepted && ++accepts_since_refresh >= 256) {
            state = refresh(state, instance);
            accepts_since_refresh = 0;
        }
        ++visits[support_rank(instance.n(), state.support().indices())];
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < visits.size(); ++i)
        tv += std::abs(static_cast<double>(visits[i]) / static_cast<double>(steps) -
                       table.probabilities[i]);
    tv *= 0.5;
    const bool tv_pass = tv < tv_tol;

    // Optimality: seeded SA runs against the exhaustive optimum, plus OMP
    // for reference.
    const ExhaustiveResult optimum =
        exhaustive_search(instance, k, kEnumerationCap, opts.threads);
    const int n_trials = trials;
    std::vector<char> hits(static_cast<std::size_t>(n_trials), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) \
    num_threads(opts.threads > 0 ? opts.threads : omp_get_max_threads())
#endif
    for (int t = 0; t < n_trials; ++t) {
        Philox rng(derive_seed(opts.seed, static_cast<std::uint64_t>(t)), 200);
        const SaResult sa = anneal(instance, k, opts.schedule, std::nullopt, rng);
        const double gap = sa.best_rss - optimum.rss;
        hits[static_cast<std::size_t>(t)] = gap <= 1e-9 * std::max(1.0, optimum.rss) ? 1 : 0;
    }
    int hit_count = 0;
    for (char h : hits) hit_count += h;
    const double frac = static_cast<double>(hit_count) / n_trials;
    const bool opt_pass = frac >= opt_frac;

    const OmpResult greedy = omp_fit(instance, k);

    json config = common_config_json(opts);
    config["k"] = k;
    config["beta"] = beta;
    config["steps"] = steps;
    config["trials"] = trials;
    config["tv_tol"] = tv_tol;
    config["opt_frac"] = opt_frac;
    json doc{{"command", "validate"},
             {"config", std::move(config)},
             {"equilibrium", json{{"tv", tv}, {"tol", tv_tol}, {"pass", tv_pass}}},
             {"optimality", json{{"hits", hit_count},
                                 {"trials", trials},
                                 {"fraction", frac},
                                 {"threshold", opt_frac},
                                 {"exhaustive_rss", optimum.rss},
                                 {"exhaustive_support", support_to_json(optimum.support)},
                                 {"omp_rss", greedy.state.rss()},
                                 {"pass", opt_pass}}},
             {"pass", tv_pass && opt_pass}};
    write_json_file(fs::path(opts.out_dir) / "validate.json", doc);

    std::cout << (tv_pass ? "PASS" : "FAIL") << " equilibrium: TV = " << format_double(tv)
              << " (tol " << format_double(tv_tol) << ")\n";
    std::cout << (opt_pass ? "PASS" : "FAIL") << " optimality: " << hit_count << "/" << trials
              << " runs reached the exhaustive optimum (threshold " << format_double(opt_frac)
              << ")\n";
    return tv_pass && opt_pass ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-sparse least-squares approximation by pair-flip simulated annealing"};
    app.require_subcommand(1);

    CommonOpts solve_opts;
    int solve_k = 0;
    auto* solve_cmd = app.add_subcommand("solve", "Anneal a single K and report the best support");
    add_common_flags(solve_cmd, solve_opts);
    solve_cmd->add_option("--k", solve_k, "Sparsity (number of selected columns)")->required();

    CommonOpts cv_opts;
    std::string k_set_text;
    std::string folds_text = "loo";
    int top = 5;
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validated sweep over K");
    add_common_flags(cv_cmd, cv_opts);
    cv_cmd->add_option("--k-set", k_set_text, "K values: 'a,b,c' or 'lo:hi[:step]'")->required();
    cv_cmd->add_option("--folds", folds_text, "'loo' or 'k:<n>'")->capture_default_str();
    cv_cmd->add_option("--top", top, "Rows per K in the frequency table")->capture_default_str();

    SynthParams synth_params;
    std::string synth_out = ".";
    auto* synth_cmd = app.add_subcommand("synth", "Generate a planted synthetic instance");
    synth_cmd->add_option("--n", synth_params.n, "Number of columns")->capture_default_str();
    synth_cmd->add_option("--alpha", synth_params.alpha, "Row/column ratio M/N")
        ->capture_default_str();
    synth_cmd->add_option("--rho0", synth_params.rho0, "Density of the planted vector")
        ->capture_default_str();
    synth_cmd->add_option("--sigma-x2", synth_params.sigma_x2, "Variance of nonzero entries")
        ->capture_default_str();
    synth_cmd->add_option("--sigma-xi2", synth_params.sigma_xi2, "Noise variance")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_params.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_out, "Output directory")->capture_default_str();

    CommonOpts validate_opts;
    int validate_k = 2;
    double validate_beta = 2.0;
    long validate_steps = 1000000;
    int validate_trials = 20;
    double tv_tol = 0.02;
    double opt_frac = 0.95;
    auto* validate_cmd =
        app.add_subcommand("validate", "Check the sampler against enumeration oracles");
    add_common_flags(validate_cmd, validate_opts);
    validate_cmd->add_option("--k", validate_k, "Sparsity")->capture_default_str();
    validate_cmd->add_option("--beta", validate_beta, "Fixed inverse temperature")
        ->capture_default_str();
    validate_cmd->add_option("--steps", validate_steps, "Chain length for the equilibrium check")
        ->capture_default_str();
    validate_cmd->add_option("--trials", validate_trials, "Seeded SA runs for the optimality check")
        ->capture_default_str();
    validate_cmd->add_option("--tv-tol", tv_tol, "Total-variation tolerance")
        ->capture_default_str();
    validate_cmd->add_option("--opt-frac", opt_frac, "Required fraction of optimal runs")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(solve_opts, solve_k);
        if (cv_cmd->parsed()) return cmd_cv(cv_opts, k_set_text, folds_text, top);
        if (synth_cmd->parsed()) return cmd_synth(synth_params, synth_out);
        if (validate_cmd->parsed())
            return cmd_validate(validate_opts, validate_k, validate_beta, validate_steps,
                                validate_trials, tv_tol, opt_frac);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const EmptyData& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const TooLarge& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "hint: the oracle checks enumerate all C(N,K) supports; use a smaller "
                     "instance or K\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
