// Command-line front end: repair, audit, check-model, check-ci, export-wcnf.
//
// Conventions shared by every subcommand:
//   - stdout carries exactly one line, the path of the primary artifact;
//     everything else goes to files in --out-dir plus a JSON-lines run log.
//   - exit 0 on success, 2 on validation errors (with a machine-readable
//     error JSON on stderr and in error.json), 3 when a search budget ran
//     out (the partial result is still written).
//   - numeric parameters that feed exact arithmetic (tolerance, fractions)
//     are rational strings like "1/100"; decimals are rejected on purpose.
//   - any long option may instead be supplied through a JSON object passed
//     as --config file.json; explicit command-line flags win.

#include "fairrep/audit.hpp"
#include "fairrep/causal_model.hpp"
#include "fairrep/csv_io.hpp"
#include "fairrep/factorize.hpp"
#include "fairrep/independence.hpp"
#include "fairrep/repair.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairrep;

namespace {

// Where error.json lands if a command dies after resolving its output
// directory; empty until then.
std::string g_error_dir;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << text;
}

json rat_entry(const Rat& r) {
    return json{{"exact", rat_to_string(r)}, {"approx", to_double(r)}};
}

Rat parse_rat(const std::string& text, const char* flag) {
    const auto r = rat_from_string(text);
    if (!r) {
        throw ValidationError(std::string(flag) + ": '" + text +
                              "' is not a rational (write decimals as fractions, e.g. 1/100)");
    }
    return *r;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path out(dir.empty() ? "." : dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ValidationError("cannot create output directory: " + out.string());
    g_error_dir = out.string();
    return out;
}

// Deliberately timestamp-free so identical runs produce identical bytes.
class RunLog {
public:
    explicit RunLog(const fs::path& path) : out_(path, std::ios::binary) {}

    void event(const std::string& name, json fields = json::object()) {
        fields["event"] = name;
        out_ << fields.dump() << "\n";
    }

private:
    std::ofstream out_;
};

Bag load_bag(const std::string& input, const std::string& domains, RunLog& log) {
    const std::optional<fs::path> sidecar =
        domains.empty() ? std::nullopt : std::optional<fs::path>(domains);
    Bag bag = read_csv_file(input, sidecar);
    log.event("load", {{"path", input},
                       {"rows", bag.total()},
                       {"distinct", bag.distinct()},
                       {"attributes", bag.schema().size()}});
    return bag;
}

CiStatement load_ci(const std::string& path) { return ci_from_json(read_text(path)); }

// {"z": [...], "x": [...], "y": [...]}; y may be omitted and defaults to the
// attributes left over, in schema order.
Mvd load_mvd(const std::string& path, const Schema& schema) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("mvd: ") + e.what());
    }
    auto names = [&](const char* key) {
        std::vector<std::string> out;
        if (!doc.contains(key)) return out;
        if (!doc[key].is_array()) throw ValidationError(std::string("mvd: '") + key + "' must be a list");
        for (const json& v : doc[key]) {
            if (!v.is_string()) throw ValidationError(std::string("mvd: '") + key + "' entries must be strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    };
    Mvd mvd;
    mvd.z = names("z");
    mvd.x = names("x");
    mvd.y = names("y");
    if (mvd.z.empty() && !doc.contains("z")) throw ValidationError("mvd: missing 'z'");
    if (mvd.x.empty() && !doc.contains("x")) throw ValidationError("mvd: missing 'x'");
    if (!doc.contains("y")) {
        std::set<std::string> used(mvd.z.begin(), mvd.z.end());
        used.insert(mvd.x.begin(), mvd.x.end());
        for (const auto& attr : schema.attributes()) {
            if (!used.count(attr.name)) mvd.y.push_back(attr.name);
        }
    }
    mvd.check_partition(schema);
    return mvd;
}

json ci_json(const CiStatement& ci) {
    return json{{"x", ci.x}, {"y", ci.y}, {"z", ci.z}};
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// ---------------------------------------------------------------- repair --

struct RepairArgs {
    std::string input;
    std::string domains;
    std::string ci;
    std::string mvd;
    std::string roles;
    std::string method = "maxsat";
    std::string soft_fraction = "1";
    std::string tolerance = "0";
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::uint64_t budget_decisions = 0;  // 0 = unlimited
    std::uint64_t budget_ms = 0;
    std::size_t clause_cap = EncodeOptions{}.clause_cap;
    std::size_t nmf_iters = FactorizeOptions{}.nmf_iters;
    std::uint64_t scale_cap = kDefaultScaleCap;
    std::size_t tensor_cap = kDefaultTensorCap;
    bool forbid_insertions = false;
};

int run_repair(const RepairArgs& args) {
    const fs::path out = prepare_out_dir(args.out_dir);
    RunLog log(out / "repair_log.jsonl");

    if (args.ci.empty() == args.mvd.empty()) {
        throw ValidationError("repair needs exactly one of --ci or --mvd");
    }
    const Rat soft_fraction = parse_rat(args.soft_fraction, "--soft-fraction");
    const Rat tolerance = parse_rat(args.tolerance, "--tolerance");
    const bool sampling = soft_fraction != Rat(1);
    if (sampling && !args.seed) throw ValidationError("--soft-fraction below 1 needs --seed");

    const Bag bag = load_bag(args.input, args.domains, log);

    json report;
    report["method"] = args.method;
    RepairResult result(Bag(bag.schema()), Bag(bag.schema()), Bag(bag.schema()));
    std::optional<CiStatement> ci;

    if (!args.mvd.empty()) {
        if (args.method != "maxsat") {
            throw ValidationError("--mvd repairs are maxsat-only; ic/nmf need a --ci statement");
        }
        const Mvd mvd = load_mvd(args.mvd, bag.schema());
        RepairOptions options;
        options.encoding.soft_fraction = soft_fraction;
        options.encoding.seed = args.seed;
        options.encoding.clause_cap = args.clause_cap;
        options.encoding.forbid_insertions = args.forbid_insertions;
        if (args.budget_decisions) options.budget.max_decisions = args.budget_decisions;
        if (args.budget_ms) options.budget.time_limit = std::chrono::milliseconds(args.budget_ms);
        options.threads = resolve_threads(args.threads);
        result = repair_mvd(bag, mvd, options);
        report["mvd"] = json{{"z", mvd.z}, {"x", mvd.x}, {"y", mvd.y}};
    } else {
        ci = load_ci(args.ci);
        report["ci"] = ci_json(*ci);
        if (args.method == "maxsat") {
            RepairOptions options;
            options.encoding.soft_fraction = soft_fraction;
            options.encoding.seed = args.seed;
            options.encoding.clause_cap = args.clause_cap;
            options.encoding.forbid_insertions = args.forbid_insertions;
            if (args.budget_decisions) options.budget.max_decisions = args.budget_decisions;
            if (args.budget_ms) options.budget.time_limit = std::chrono::milliseconds(args.budget_ms);
            options.threads = resolve_threads(args.threads);
            result = repair_ci(bag, *ci, options);
        } else if (args.method == "ic" || args.method == "nmf") {
            FactorizeOptions options;
            options.method = args.method == "ic" ? FactorizeMethod::kIndependentCoupling
                                                 : FactorizeMethod::kNmf;
            options.nmf_iters = args.nmf_iters;
            options.seed = args.seed;
            options.scale_cap = args.scale_cap;
            options.tensor_cap = args.tensor_cap;
            options.threads = resolve_threads(args.threads);
            result = factorize_repair(bag, *ci, options);
        } else {
            throw ValidationError("unknown --method '" + args.method +
                                  "' (expected maxsat, ic or nmf)");
        }
    }

    report["delta"] = result.delta;
    report["scale"] = result.scale;
    report["optimal"] = result.optimal;
    report["solver_optimal"] = result.solver_optimal;
    report["inserted"] = json{{"rows", result.inserted.total()},
                              {"distinct", result.inserted.distinct()}};
    report["deleted"] = json{{"rows", result.deleted.total()},
                             {"distinct", result.deleted.distinct()}};
    if (result.l1) report["l1"] = rat_entry(*result.l1);
    if (args.seed) report["seed"] = *args.seed;
    report["soft_fraction"] = rat_to_string(soft_fraction);

    if (ci) {
        const Rat before = ci_gap(bag, *ci);
        const Rat after = ci_gap(result.repaired, *ci);
        report["gap_before"] = rat_entry(before);
        report["gap_after"] = rat_entry(after);
        report["holds_after"] = after <= tolerance;
        report["cmi_before"] = conditional_mutual_information(bag, *ci);
        report["cmi_after"] = conditional_mutual_information(result.repaired, *ci);
    }

    if (!args.roles.empty()) {
        const FairnessApplication app = app_from_file(args.roles);
        const AuditReport before = audit_bag(bag, app, app.admissible);
        const AuditReport after = audit_bag(result.repaired, app, app.admissible);
        write_text(out / "metrics_before.json", report_to_json(before, bag.schema()));
        write_text(out / "metrics_after.json", report_to_json(after, result.repaired.schema()));
        report["metrics_before"] = (out / "metrics_before.json").string();
        report["metrics_after"] = (out / "metrics_after.json").string();
    }

    const fs::path repaired_path = out / "repaired.csv";
    write_csv_file(repaired_path, result.repaired);
    write_text(out / "repair.json", report.dump(2) + "\n");
    log.event("repair", {{"delta", result.delta},
                         {"optimal", result.optimal},
                         {"solver_optimal", result.solver_optimal},
                         {"scale", result.scale}});
    log.event("artifact", {{"path", repaired_path.string()}});
    std::cout << repaired_path.string() << "\n";
    return result.solver_optimal ? 0 : 3;
}

// ----------------------------------------------------------------- audit --

struct AuditArgs {
    std::string input;
    std::string domains;
    std::string roles;
    std::string test;       // optional held-out bag for the generalization check
    std::string tolerance = "0";
    std::string out_dir = ".";
    std::vector<std::string> context;      // defaults to the admissible set
    std::vector<std::string> train_attrs;  // triggers the training certificate
};

json certificate_json(const Certificate& cert) {
    return json{{"certified", cert.certified},
                {"condition_a",
                 json{{"holds", cert.condition_a},
                      {"vacuous", cert.vacuous_a},
                      {"gap", rat_entry(cert.gap_a)},
                      {"statement", cert.statement_a}}},
                {"condition_b",
                 json{{"holds", cert.condition_b},
                      {"covers_admissible", cert.covers_admissible},
                      {"saturated", cert.b_saturated},
                      {"gap", rat_entry(cert.gap_b)},
                      {"statement", cert.statement_b}}}};
}

int run_audit(const AuditArgs& args) {
    const fs::path out = prepare_out_dir(args.out_dir);
    RunLog log(out / "audit_log.jsonl");

    const Rat tolerance = parse_rat(args.tolerance, "--tolerance");
    const Bag bag = load_bag(args.input, args.domains, log);
    const FairnessApplication app = app_from_file(args.roles);
    const std::vector<std::string>& context =
        args.context.empty() ? app.admissible : args.context;

    const AuditReport report = audit_bag(bag, app, context);
    json doc = json::parse(report_to_json(report, bag.schema()));

    if (!args.train_attrs.empty()) {
        const Certificate cert =
            certify_fair_training(bag, app, args.train_attrs, tolerance);
        doc["certificate"] = certificate_json(cert);
        log.event("certificate", {{"certified", cert.certified}});
    }
    if (!args.test.empty()) {
        const Bag test = load_bag(args.test, args.domains, log);
        const GeneralizationReport gen = generalization_check(bag, test, app, tolerance);
        json entry;
        entry["statement"] = ci_json(gen.statement);
        entry["train_gap"] = rat_entry(gen.train_gap);
        entry["test_gap"] = rat_entry(gen.test_gap);
        entry["train_holds"] = gen.train_holds;
        entry["test_holds"] = gen.test_holds;
        entry["max_conditional_gap"] = rat_entry(gen.max_conditional_gap);
        entry["train_only_contexts"] = gen.train_only.size();
        entry["test_only_contexts"] = gen.test_only.size();
        entry["implication_active"] = gen.implication_active;
        doc["generalization"] = entry;
        log.event("generalization", {{"max_gap", rat_to_string(gen.max_conditional_gap)}});
    }

    const fs::path report_path = out / "audit.json";
    write_text(report_path, doc.dump(2) + "\n");
    write_text(out / "audit.txt", report_to_text(report, bag.schema()));
    log.event("artifact", {{"path", report_path.string()}});
    std::cout << report_path.string() << "\n";
    return 0;
}

// ----------------------------------------------------------- check-model --

struct CheckModelArgs {
    std::string model;
    std::string roles;
    std::string mode = "exhaustive";
    std::string tolerance = "0";
    std::string queries;  // optional file of interventional queries
    std::string out_dir = ".";
};

json witness_json(const KFairWitness& witness) {
    json context = json::object();
    for (const auto& [name, value] : witness.context) context[name] = value;
    return json{{"k", witness.k},
                {"context", context},
                {"outcome_value", witness.outcome_value},
                {"probability_s0", rat_entry(witness.probability_s0)},
                {"probability_s1", rat_entry(witness.probability_s1)}};
}

// Query file: [{"event": {"O": "1"}, "do": [["G", "male"], ["D", "A"]]}].
// Each query is answered twice, by truncated factorization and by the
// adjustment formula; both values are reported so disagreement is visible.
json run_queries(const CausalModel& model, const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("queries: ") + e.what());
    }
    if (!doc.is_array()) throw ValidationError("queries: expected a json array");

    json results = json::array();
    for (const json& q : doc) {
        if (!q.is_object() || !q.contains("event") || !q.contains("do")) {
            throw ValidationError("queries: each entry needs 'event' and 'do'");
        }
        const json& event = q["event"];
        if (!event.is_object() || event.size() != 1) {
            throw ValidationError("queries: 'event' must assign exactly one variable");
        }
        const std::string outcome = event.items().begin().key();
        const std::string outcome_value = event.items().begin().value().get<std::string>();

        Assignment fixed;
        if (!q["do"].is_array()) throw ValidationError("queries: 'do' must be a list of pairs");
        for (const json& pair : q["do"]) {
            if (!pair.is_array() || pair.size() != 2) {
                throw ValidationError("queries: 'do' entries are [variable, value] pairs");
            }
            fixed.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
        }

        const Dist truncated = model.intervene(fixed);
        const Rat p_intervene =
            event_probability(truncated, Assignment{{outcome, outcome_value}});
        const Dist adjusted = model.extended_adjustment(outcome, fixed);
        const Rat p_adjustment =
            event_probability(adjusted, Assignment{{outcome, outcome_value}});

        json entry;
        entry["event"] = event;
        entry["do"] = q["do"];
        entry["intervene"] = rat_entry(p_intervene);
        entry["adjustment"] = rat_entry(p_adjustment);
        entry["routes_agree"] = p_intervene == p_adjustment;
        results.push_back(entry);
    }
    return results;
}

int run_check_model(const CheckModelArgs& args) {
    const fs::path out = prepare_out_dir(args.out_dir);
    RunLog log(out / "check_model_log.jsonl");

    const Rat tolerance = parse_rat(args.tolerance, "--tolerance");
    const CausalModel model = model_from_file(args.model);
    log.event("load", {{"path", args.model}, {"variables", model.schema().size()}});
    const FairnessApplication app = app_from_file(args.roles);

    FairnessMode mode;
    if (args.mode == "exhaustive") {
        mode = FairnessMode::kExhaustive;
    } else if (args.mode == "path") {
        mode = FairnessMode::kPathCriterion;
    } else {
        throw ValidationError("unknown --mode '" + args.mode + "' (expected exhaustive or path)");
    }

    const FairnessVerdict verdict = justifiably_fair(model, app, mode, tolerance);

    json doc;
    doc["fair"] = verdict.fair;
    doc["mode"] = args.mode;
    doc["tolerance"] = rat_to_string(tolerance);
    if (verdict.counterexample) doc["counterexample"] = witness_json(*verdict.counterexample);
    if (!verdict.violating_path.empty()) doc["violating_path"] = verdict.violating_path;
    if (!args.queries.empty()) doc["queries"] = run_queries(model, args.queries);

    const fs::path verdict_path = out / "verdict.json";
    write_text(verdict_path, doc.dump(2) + "\n");
    log.event("verdict", {{"fair", verdict.fair}, {"mode", args.mode}});
    log.event("artifact", {{"path", verdict_path.string()}});
    std::cout << verdict_path.string() << "\n";
    return 0;
}

// -------------------------------------------------------------- check-ci --

struct CheckCiArgs {
    std::string input;
    std::string domains;
    std::string ci;
    std::string tolerance = "0";
    std::string out_dir = ".";
};

int run_check_ci(const CheckCiArgs& args) {
    const fs::path out = prepare_out_dir(args.out_dir);
    RunLog log(out / "check_ci_log.jsonl");

    const Rat tolerance = parse_rat(args.tolerance, "--tolerance");
    const Bag bag = load_bag(args.input, args.domains, log);
    const CiStatement ci = load_ci(args.ci);

    const Rat gap = ci_gap(bag, ci);
    json doc;
    doc["statement"] = ci_json(ci);
    doc["gap"] = rat_entry(gap);
    doc["holds"] = gap <= tolerance;
    doc["tolerance"] = rat_to_string(tolerance);
    doc["cmi_nats"] = conditional_mutual_information(bag, ci);
    doc["saturated"] = ci.saturated(bag.schema());
    doc["rows"] = bag.total();

    const fs::path report_path = out / "ci_check.json";
    write_text(report_path, doc.dump(2) + "\n");
    log.event("check", {{"gap", rat_to_string(gap)}, {"holds", gap <= tolerance}});
    log.event("artifact", {{"path", report_path.string()}});
    std::cout << report_path.string() << "\n";
    return 0;
}

// ------------------------------------------------------------ export-wcnf --

struct ExportArgs {
    std::string input;
    std::string domains;
    std::string ci;
    std::string mvd;
    std::string soft_fraction = "1";
    std::string out_dir = ".";
    std::string out_file;  // default <out-dir>/problem.wcnf
    std::optional<std::uint64_t> seed;
    std::size_t clause_cap = EncodeOptions{}.clause_cap;
    bool forbid_insertions = false;
};

int run_export_wcnf(const ExportArgs& args) {
    const fs::path out = prepare_out_dir(args.out_dir);
    RunLog log(out / "export_wcnf_log.jsonl");

    if (args.ci.empty() == args.mvd.empty()) {
        throw ValidationError("export-wcnf needs exactly one of --ci or --mvd");
    }
    EncodeOptions options;
    options.soft_fraction = parse_rat(args.soft_fraction, "--soft-fraction");
    options.seed = args.seed;
    options.clause_cap = args.clause_cap;
    options.forbid_insertions = args.forbid_insertions;

    const Bag bag = load_bag(args.input, args.domains, log);

    WcnfProblem problem;
    if (!args.mvd.empty()) {
        problem = encode(bag, load_mvd(args.mvd, bag.schema()), options);
    } else {
        const CiStatement ci = load_ci(args.ci);
        const KeyedSet keyed = to_keyed_set(bag);
        problem = encode(keyed.relation, keyed_mvd(ci.as_mvd(bag.schema())), options);
    }

    const fs::path wcnf_path =
        args.out_file.empty() ? out / "problem.wcnf" : fs::path(args.out_file);
    export_wcnf_file(problem, wcnf_path.string());
    log.event("encode", {{"variables", problem.num_vars},
                         {"hard", problem.hard.size()},
                         {"soft", problem.soft.size()}});
    log.event("artifact", {{"path", wcnf_path.string()}});
    std::cout << wcnf_path.string() << "\n";
    return 0;
}

// ----------------------------------------------------------------- wiring --

std::string scalar_text(const json& value, const std::string& key) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<long long>());
    if (value.is_number_unsigned()) return std::to_string(value.get<unsigned long long>());
    throw ValidationError("config: key '" + key +
                          "' must be a string, integer, boolean or array of those");
}

// Expands --config file.json into synthetic long options appended after the
// real command line. Keys already given explicitly are skipped, so flags on
// the command line always win.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty()) return args;

    json doc;
    try {
        doc = json::parse(read_text(config_path));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config: expected a json object");

    std::set<std::string> explicit_flags;
    for (const std::string& arg : args) {
        if (arg.rfind("--", 0) != 0) continue;
        std::string name = arg.substr(2);
        const std::size_t eq = name.find('=');
        if (eq != std::string::npos) name = name.substr(0, eq);
        explicit_flags.insert(name);
    }

    for (const auto& [key, value] : doc.items()) {
        if (key == "config" || explicit_flags.count(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else if (value.is_array()) {
            for (const json& v : value) args.push_back("--" + key + "=" + scalar_text(v, key));
        } else {
            args.push_back("--" + key + "=" + scalar_text(value, key));
        }
    }
    return args;
}

void emit_error(const char* kind, const std::string& message) {
    const json doc{{"error", kind}, {"message", message}};
    std::cerr << doc.dump() << "\n";
    if (!g_error_dir.empty()) {
        std::ofstream out(fs::path(g_error_dir) / "error.json", std::ios::binary);
        if (out) out << doc.dump(2) << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dataset repair and fairness auditing for discrete tabular data"};
    app.require_subcommand(1);

    std::string config_dummy;  // consumed by apply_config before parsing

    RepairArgs repair_args;
    CLI::App* repair_cmd = app.add_subcommand(
        "repair", "Repair a dataset toward a conditional independence statement");
    repair_cmd->add_option("--input", repair_args.input, "Input CSV")->required();
    repair_cmd->add_option("--domains", repair_args.domains, "Domain sidecar JSON");
    repair_cmd->add_option("--ci", repair_args.ci, "Saturated CI statement JSON");
    repair_cmd->add_option("--mvd", repair_args.mvd, "MVD JSON (deduplicated relations)");
    repair_cmd->add_option("--roles", repair_args.roles,
                           "Roles JSON; adds before/after metric reports");
    repair_cmd->add_option("--method", repair_args.method, "maxsat, ic or nmf");
    repair_cmd->add_option("--soft-fraction", repair_args.soft_fraction,
                           "Fraction of witness clauses kept (rational)");
    repair_cmd->add_option("--tolerance", repair_args.tolerance,
                           "Gap tolerance for the post-repair check (rational)");
    repair_cmd->add_option("--seed", repair_args.seed, "Seed for randomized paths");
    repair_cmd->add_option("--threads", repair_args.threads, "Worker threads (0 = all cores)");
    repair_cmd->add_option("--budget-decisions", repair_args.budget_decisions,
                           "Solver decision budget (0 = unlimited)");
    repair_cmd->add_option("--budget-ms", repair_args.budget_ms,
                           "Solver time budget in milliseconds (0 = unlimited)");
    repair_cmd->add_option("--clause-cap", repair_args.clause_cap, "Witness clause cap");
    repair_cmd->add_option("--nmf-iters", repair_args.nmf_iters, "NMF iteration cap");
    repair_cmd->add_option("--scale-cap", repair_args.scale_cap,
                           "Largest exact rescaling for ic integerization");
    repair_cmd->add_option("--tensor-cap", repair_args.tensor_cap,
                           "Contingency tensor cell cap");
    repair_cmd->add_flag("--forbid-insertions", repair_args.forbid_insertions,
                         "Deletion-only repair");
    repair_cmd->add_option("--out-dir", repair_args.out_dir, "Artifact directory");
    repair_cmd->add_option("--config", config_dummy, "JSON file of option defaults");

    AuditArgs audit_args;
    CLI::App* audit_cmd = app.add_subcommand("audit", "Fairness metric report for a dataset");
    audit_cmd->add_option("--input", audit_args.input, "Input CSV")->required();
    audit_cmd->add_option("--domains", audit_args.domains, "Domain sidecar JSON");
    audit_cmd->add_option("--roles", audit_args.roles, "Roles JSON")->required();
    audit_cmd->add_option("--context", audit_args.context,
                          "Conditioning attributes (default: the admissible set)");
    audit_cmd->add_option("--train-attrs", audit_args.train_attrs,
                          "Training attributes; adds the fair-training certificate");
    audit_cmd->add_option("--test", audit_args.test,
                          "Held-out CSV; adds the generalization check");
    audit_cmd->add_option("--tolerance", audit_args.tolerance,
                          "CI tolerance for certificate and generalization (rational)");
    audit_cmd->add_option("--out-dir", audit_args.out_dir, "Artifact directory");
    audit_cmd->add_option("--config", config_dummy, "JSON file of option defaults");

    CheckModelArgs model_args;
    CLI::App* model_cmd =
        app.add_subcommand("check-model", "Interventional fairness verdict for a causal model");
    model_cmd->add_option("--model", model_args.model, "Model JSON")->required();
    model_cmd->add_option("--roles", model_args.roles, "Roles JSON")->required();
    model_cmd->add_option("--mode", model_args.mode, "exhaustive or path");
    model_cmd->add_option("--tolerance", model_args.tolerance, "Probability tolerance (rational)");
    model_cmd->add_option("--queries", model_args.queries,
                          "JSON list of interventional queries to evaluate");
    model_cmd->add_option("--out-dir", model_args.out_dir, "Artifact directory");
    model_cmd->add_option("--config", config_dummy, "JSON file of option defaults");

    CheckCiArgs ci_args;
    CLI::App* ci_cmd =
        app.add_subcommand("check-ci", "Exact conditional independence check on a dataset");
    ci_cmd->add_option("--input", ci_args.input, "Input CSV")->required();
    ci_cmd->add_option("--domains", ci_args.domains, "Domain sidecar JSON");
    ci_cmd->add_option("--ci", ci_args.ci, "CI statement JSON")->required();
    ci_cmd->add_option("--tolerance", ci_args.tolerance, "Gap tolerance (rational)");
    ci_cmd->add_option("--out-dir", ci_args.out_dir, "Artifact directory");
    ci_cmd->add_option("--config", config_dummy, "JSON file of option defaults");

    ExportArgs export_args;
    CLI::App* export_cmd =
        app.add_subcommand("export-wcnf", "Write the repair encoding as DIMACS WCNF");
    export_cmd->add_option("--input", export_args.input, "Input CSV")->required();
    export_cmd->add_option("--domains", export_args.domains, "Domain sidecar JSON");
    export_cmd->add_option("--ci", export_args.ci, "Saturated CI statement JSON");
    export_cmd->add_option("--mvd", export_args.mvd, "MVD JSON (deduplicated relations)");
    export_cmd->add_option("--soft-fraction", export_args.soft_fraction,
                           "Fraction of witness clauses kept (rational)");
    export_cmd->add_option("--seed", export_args.seed, "Seed when sampling clauses");
    export_cmd->add_option("--clause-cap", export_args.clause_cap, "Witness clause cap");
    export_cmd->add_flag("--forbid-insertions", export_args.forbid_insertions,
                         "Deletion-only encoding");
    export_cmd->add_option("--out", export_args.out_file, "Output path (default problem.wcnf)");
    export_cmd->add_option("--out-dir", export_args.out_dir, "Artifact directory");
    export_cmd->add_option("--config", config_dummy, "JSON file of option defaults");

    int code = 0;
    repair_cmd->callback([&] { code = run_repair(repair_args); });
    audit_cmd->callback([&] { code = run_audit(audit_args); });
    model_cmd->callback([&] { code = run_check_model(model_args); });
    ci_cmd->callback([&] { code = run_check_ci(ci_args); });
    export_cmd->callback([&] { code = run_export_wcnf(export_args); });

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = apply_config(std::move(args));
        std::vector<const char*> ptrs;
        ptrs.reserve(args.size());
        for (const std::string& a : args) ptrs.push_back(a.c_str());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::ParseError& e) {
        const int parse_code = app.exit(e);
        return parse_code == 0 ? 0 : 2;
    } catch (const CapacityError& e) {
        emit_error("capacity", e.what());
        return 2;
    } catch (const ValidationError& e) {
        emit_error("validation", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
    return code;
}
