#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptt/estimators.hpp"
#include "ptt/markov_order.hpp"
#include "ptt/measures.hpp"
#include "ptt/process_tensor.hpp"
#include "ptt/sampler.hpp"
#include "ptt/shadows.hpp"
#include "ptt/sim_experiment.hpp"
#include "ptt/tomo_basis.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

int log_level() {
    const char* env = std::getenv("PTT_LOG");
    if (!env) return 1;
    return std::atoi(env);
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[ptt] " << msg << "\n";
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_artifact(const std::string& path, nlohmann::json payload, std::uint64_t seed) {
    nlohmann::json body = payload;
    body.erase("provenance");
    payload["provenance"] = {{"config_hash", ptt::json_hash(body)},
                             {"seed", seed},
                             {"version", kVersion}};
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << payload.dump(2) << "\n";
}

ptt::ProcessTensorChoi load_pt(const std::string& path, bool require_causal) {
    nlohmann::json j = load_json(path);
    ptt::ProcessTensorChoi pt = ptt::ProcessTensorChoi::from_json(j);
    if (require_causal) {
        auto report = ptt::check_causal(pt);
        if (report.max_violation > 1e-6)
            throw std::invalid_argument(path + ": process tensor violates causality (" +
                                        std::to_string(report.max_violation) + ")");
    }
    return pt;
}

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"process-tensor toolbox: simulate, reconstruct and analyse "
                 "discrete-time open quantum processes"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out_path;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    app.add_option("--seed", seed, "global random seed")->capture_default_str();
    app.add_option("--threads", threads, "worker cap for batch stages")->capture_default_str();

    // ---- randgen ----------------------------------------------------------
    auto* randgen = app.add_subcommand("randgen", "draw a random causal process tensor");
    int rg_k = 1, rg_ds = 2, rg_rank = 0, rg_iters = 200;
    bool rg_unital = false;
    std::string rg_out = "pt.json";
    randgen->add_option("--k", rg_k, "number of steps")->required();
    randgen->add_option("--ds", rg_ds, "system dimension")->capture_default_str();
    randgen->add_option("--rank", rg_rank, "target rank (0 = full)")->capture_default_str();
    randgen->add_option("--max-iters", rg_iters, "projection sweep budget")->capture_default_str();
    randgen->add_flag("--unital", rg_unital, "also impose global unitality");
    randgen->add_option("--out", rg_out, "output file")->capture_default_str();

    // ---- simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "generate synthetic tomography data");
    std::string sim_spec, sim_basis, sim_out = "data.jsonl";
    long sim_shots = 0;
    simulate->add_option("--spec", sim_spec, "dilated process spec")->required();
    simulate->add_option("--basis", sim_basis, "instrument basis file")->required();
    simulate->add_option("--shots", sim_shots, "shots per circuit (0 = exact)")
        ->capture_default_str();
    simulate->add_option("--out", sim_out, "output dataset")->capture_default_str();

    // ---- basis ------------------------------------------------------------
    auto* basis_cmd = app.add_subcommand("basis", "construct an instrument basis");
    std::string basis_kind = "muub", basis_out = "basis.json";
    int basis_count = 10, basis_restarts = 32;
    basis_cmd->add_option("--kind", basis_kind, "muub | ic | random")->capture_default_str();
    basis_cmd->add_option("--count", basis_count, "element count for random bases")
        ->capture_default_str();
    basis_cmd->add_option("--restarts", basis_restarts, "search restarts")->capture_default_str();
    basis_cmd->add_option("--out", basis_out, "output file")->capture_default_str();

    // ---- fit --------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "reconstruct a process tensor from data");
    std::string fit_data, fit_basis, fit_method = "mle", fit_out = "pt.json", fit_report;
    int fit_rank = 0, fit_k = 0, fit_iters = 400;
    fit->add_option("--data", fit_data, "dataset (jsonl)")->required();
    fit->add_option("--basis", fit_basis, "instrument basis file")->required();
    fit->add_option("--method", fit_method, "li | mle | mle-rank")->capture_default_str();
    fit->add_option("--rank", fit_rank, "rank cap for mle-rank")->capture_default_str();
    fit->add_option("--k", fit_k, "steps (0 = infer from data)")->capture_default_str();
    fit->add_option("--max-iters", fit_iters, "descent iteration cap")->capture_default_str();
    fit->add_option("--out", fit_out, "estimate output")->capture_default_str();
    fit->add_option("--report", fit_report, "fit report output");

    // ---- fit-cmo ----------------------------------------------------------
    auto* fitcmo = app.add_subcommand("fit-cmo", "fit a conditional-Markov-order model");
    std::string cmo_spec, cmo_basis, cmo_out = "model.json";
    int cmo_ell = 1;
    long cmo_shots = 0;
    fitcmo->add_option("--spec", cmo_spec, "dilated process spec")->required();
    fitcmo->add_option("--basis", cmo_basis, "instrument basis file")->required();
    fitcmo->add_option("--ell", cmo_ell, "memory length")->required();
    fitcmo->add_option("--shots", cmo_shots, "shots per circuit (0 = exact)")
        ->capture_default_str();
    fitcmo->add_option("--out", cmo_out, "model output")->capture_default_str();

    // ---- shadows ----------------------------------------------------------
    auto* shadows_cmd = app.add_subcommand("shadows", "sample randomised-instrument snapshots");
    std::string sh_spec, sh_ensemble = "clifford", sh_out = "shadows.jsonl", sh_estimate;
    long sh_n = 10000;
    int sh_register = 1;
    shadows_cmd->add_option("--spec", sh_spec, "dilated process spec")->required();
    shadows_cmd->add_option("--ensemble", sh_ensemble, "clifford or a basis file")
        ->capture_default_str();
    shadows_cmd->add_option("--n", sh_n, "snapshot count")->capture_default_str();
    shadows_cmd->add_option("--register", sh_register, "register qubits")->capture_default_str();
    shadows_cmd->add_option("--estimate", sh_estimate,
                            "observables file (pauli digit strings) to estimate");
    shadows_cmd->add_option("--out", sh_out, "records / estimates output")->capture_default_str();

    // ---- analyze ----------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "diagnostic bundle for a process tensor");
    std::string an_pt, an_ideal, an_out = "report.json";
    analyze->add_option("--pt", an_pt, "process tensor file")->required();
    analyze->add_option("--ideal", an_ideal, "ideal process tensor file");
    analyze->add_option("--out", an_out, "report output")->capture_default_str();

    // ---- optimize-dd ------------------------------------------------------
    auto* dd = app.add_subcommand("optimize-dd", "optimise decoupling gates");
    std::string dd_pt, dd_model, dd_out = "gates.json";
    std::vector<int> dd_window;
    int dd_budget = 400;
    dd->add_option("--pt", dd_pt, "full process tensor file");
    dd->add_option("--model", dd_model, "conditional-Markov-order model file");
    dd->add_option("--window", dd_window, "slots to optimise")->required();
    dd->add_option("--budget", dd_budget, "objective evaluation budget")->capture_default_str();
    dd->add_option("--out", dd_out, "gate parameters output")->capture_default_str();

    // ---- spec -------------------------------------------------------------
    auto* spec_cmd = app.add_subcommand("spec", "write a fixture process specification");
    std::string spec_fixture = "heisenberg", spec_out = "spec.json";
    int spec_k = 2, spec_env_qubits = 1;
    double spec_coupling = 0.9;
    spec_cmd->add_option("--fixture", spec_fixture,
                         "heisenberg | dephasing | two-step-memory")->capture_default_str();
    spec_cmd->add_option("--k", spec_k, "steps")->capture_default_str();
    spec_cmd->add_option("--env-qubits", spec_env_qubits, "environment qubits")
        ->capture_default_str();
    spec_cmd->add_option("--coupling", spec_coupling, "coupling strength")->capture_default_str();
    spec_cmd->add_option("--out", spec_out, "output file")->capture_default_str();

    // ---- validate ---------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "reconstruction fidelity against a simulator");
    std::string val_pt, val_spec, val_out = "validation.json";
    int val_count = 50;
    validate->add_option("--pt", val_pt, "estimate file")->required();
    validate->add_option("--spec", val_spec, "dilated process spec")->required();
    validate->add_option("--count", val_count, "validation sequences")->capture_default_str();
    validate->add_option("--out", val_out, "fidelity report output")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        using namespace ptt;
        if (randgen->parsed()) {
            SamplerConfig cfg;
            cfg.k = rg_k;
            cfg.d_s = rg_ds;
            cfg.rank = rg_rank;
            cfg.max_iterations = rg_iters;
            cfg.seed = seed;
            SamplerOutcome outcome =
                rg_unital ? random_unital_process_detailed(cfg) : random_process_detailed(cfg);
            log_info("converged after " + std::to_string(outcome.sweeps) + " sweeps, residual " +
                     std::to_string(outcome.residual));
            if (outcome.instability_flagged)
                log_info("rank much smaller than dimension: support-projection branch in use");
            write_artifact(rg_out, outcome.pt.to_json(), seed);
        } else if (simulate->parsed()) {
            DilatedProcessSpec spec = DilatedProcessSpec::from_json(load_json(sim_spec));
            InstrumentBasis basis = InstrumentBasis::from_json(load_json(sim_basis));
            TomographyDataset data = generate_dataset(spec, basis, pauli_6_povm(), sim_shots, seed);
            data.write_jsonl(sim_out);
            log_info("wrote " + std::to_string(data.circuits.size()) + " circuits to " + sim_out);
        } else if (basis_cmd->parsed()) {
            InstrumentBasis basis;
            if (basis_kind == "muub") {
                MuubSearchResult res = muub_search(seed, basis_restarts);
                if (!res.reached_reference)
                    log_info("warning: restart budget exhausted, best objective " +
                             std::to_string(res.objective));
                basis = unitary_basis_from_params(res.params);
            } else if (basis_kind == "ic") {
                basis = ic_measure_prepare_basis(2);
            } else if (basis_kind == "random") {
                basis = random_unitary_basis(basis_count, seed);
            } else {
                throw std::invalid_argument("basis: unknown kind " + basis_kind);
            }
            write_artifact(basis_out, basis.to_json(), seed);
        } else if (fit->parsed()) {
            TomographyDataset data = TomographyDataset::read_jsonl(fit_data);
            InstrumentBasis basis = InstrumentBasis::from_json(load_json(fit_basis));
            auto povm = pauli_6_povm();
            int k = fit_k > 0 ? fit_k
                              : static_cast<int>(data.circuits.empty()
                                                     ? 1
                                                     : data.circuits.front().mu.size());
            nlohmann::json report;
            ProcessTensorChoi estimate;
            if (fit_method == "li") {
                LiResult li = li_reconstruct(data, basis, povm, k);
                estimate = li.candidate;
                report["method"] = "li";
                report["min_eigenvalue"] = li.min_eigenvalue;
                report["spanned_dimension"] = li.spanned_dimension;
                report["informationally_complete"] = li.informationally_complete;
            } else if (fit_method == "mle" || fit_method == "mle-rank") {
                MleConfig cfg;
                cfg.max_iters = fit_iters;
                if (fit_method == "mle-rank") cfg.rank_cap = fit_rank;
                MleResult res = mle_pgdb(data, basis, povm, k, cfg);
                estimate = res.estimate;
                report["method"] = fit_method;
                report["cost_trace"] = res.report.cost_trace;
                report["final_cost"] = res.report.final_cost;
                report["causality_residual"] = res.report.causality_residual;
                report["min_eigenvalue"] = res.report.min_eigenvalue;
                report["iterations"] = res.report.iterations;
                report["backtracking_underflow"] = res.report.backtracking_underflow;
            } else {
                throw std::invalid_argument("fit: unknown method " + fit_method);
            }
            write_artifact(fit_out, estimate.to_json(), seed);
            if (!fit_report.empty()) write_artifact(fit_report, report, seed);
        } else if (fitcmo->parsed()) {
            DilatedProcessSpec spec = DilatedProcessSpec::from_json(load_json(cmo_spec));
            InstrumentBasis basis = InstrumentBasis::from_json(load_json(cmo_basis));
            auto povm = pauli_6_povm();
            Mat filler = basis.elements.front();
            auto datasets =
                generate_cmo_datasets(spec, cmo_ell, filler, basis, povm, cmo_shots, seed);
            CmoModel model = cmo_fit(datasets, basis, povm, spec.k(), cmo_ell, filler);
            write_artifact(cmo_out, model.to_json(), seed);
        } else if (shadows_cmd->parsed()) {
            DilatedProcessSpec spec = DilatedProcessSpec::from_json(load_json(sh_spec));
            if (sh_ensemble != "clifford")
                throw std::invalid_argument("shadows: only the clifford ensemble is wired to "
                                            "the command line; use the library for instrument "
                                            "ensembles");
            auto records = sample_clifford_shadows(spec, sh_register, sh_n, seed);
            if (!sh_estimate.empty()) {
                nlohmann::json obs = load_json(sh_estimate);
                std::vector<std::vector<int>> strings;
                for (const auto& s : obs.at("observables"))
                    strings.push_back(s.get<std::vector<int>>());
                auto values = estimate_observables(records, spec.k(), sh_register, strings);
                write_artifact(sh_out, {{"estimates", values}}, seed);
            } else {
                std::ofstream f(sh_out);
                if (!f) throw std::runtime_error(sh_out + ": cannot open for writing");
                nlohmann::json header = {{"spec_hash", json_hash(spec.to_json())},
                                         {"seed", seed},
                                         {"register", sh_register},
                                         {"version", kVersion}};
                f << header.dump() << "\n";
                for (const auto& r : records) {
                    nlohmann::json rec = {{"measure_ids", r.measure_ids},
                                          {"outcomes", r.outcomes},
                                          {"prep_ids", r.prep_ids}};
                    f << rec.dump() << "\n";
                }
                log_info("wrote " + std::to_string(records.size()) + " records to " + sh_out);
            }
        } else if (analyze->parsed()) {
            ProcessTensorChoi pt = load_pt(an_pt, true);
            DiagnosticsReport report;
            if (!an_ideal.empty()) {
                ProcessTensorChoi ideal = load_pt(an_ideal, true);
                report = diagnostics(pt, &ideal);
            } else {
                report = diagnostics(pt);
            }
            write_artifact(an_out, report.to_json(), seed);
            std::cout << report.summary();
        } else if (dd->parsed()) {
            ControlResult res;
            if (!dd_pt.empty()) {
                ProcessTensorChoi pt = load_pt(dd_pt, true);
                res = optimise_control(pt, dd_window, ControlObjective::IdentityChannelDistance,
                                       dd_budget);
            } else if (!dd_model.empty()) {
                CmoModel model = CmoModel::from_json(load_json(dd_model));
                res = optimise_control(model, dd_window,
                                       ControlObjective::StatePreservation, dd_budget);
            } else {
                throw std::invalid_argument("optimize-dd: provide --pt or --model");
            }
            nlohmann::json gates = nlohmann::json::array();
            for (const auto& g : res.gates)
                gates.push_back({{"theta", g.theta}, {"phi", g.phi}, {"lambda", g.lambda}});
            write_artifact(dd_out, {{"gates", gates},
                                    {"objective", res.objective},
                                    {"idle_objective", res.idle_objective},
                                    {"stalled", res.stalled}},
                           seed);
            log_info("objective " + std::to_string(res.objective) + " (idle " +
                     std::to_string(res.idle_objective) + ")");
        } else if (spec_cmd->parsed()) {
            DilatedProcessSpec spec;
            if (spec_fixture == "heisenberg")
                spec = heisenberg_spec(spec_k, spec_env_qubits, spec_coupling, seed);
            else if (spec_fixture == "dephasing")
                spec = dephasing_zz_spec(spec_k, spec_coupling);
            else if (spec_fixture == "two-step-memory")
                spec = two_step_memory_spec();
            else
                throw std::invalid_argument("spec: unknown fixture " + spec_fixture);
            write_artifact(spec_out, spec.to_json(), seed);
        } else if (validate->parsed()) {
            ProcessTensorChoi pt = load_pt(val_pt, false);
            DilatedProcessSpec spec = DilatedProcessSpec::from_json(load_json(val_spec));
            auto sequences = validation_sequences(spec, val_count, seed);

            // per-sequence fidelities are independent; chunk them over threads
            int workers = std::max(1, std::min<int>(threads, static_cast<int>(sequences.size())));
            std::vector<double> values(sequences.size());
            std::vector<std::thread> pool;
            std::size_t chunk = (sequences.size() + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                std::size_t lo = static_cast<std::size_t>(w) * chunk;
                std::size_t hi = std::min(sequences.size(), lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back([&, lo, hi]() {
                    for (std::size_t i = lo; i < hi; ++i) {
                        std::vector<ValidationSequence> one = {sequences[i]};
                        values[i] = reconstruction_fidelity(pt, one).mean;
                    }
                });
            }
            for (auto& t : pool) t.join();
            FidelityStats stats = fidelity_stats(values);
            write_artifact(val_out, {{"median", stats.median},
                                     {"mean", stats.mean},
                                     {"stdev", stats.stdev},
                                     {"values", stats.values},
                                     {"count", val_count}},
                           seed);
            std::cout << "median fidelity " << stats.median << "\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
