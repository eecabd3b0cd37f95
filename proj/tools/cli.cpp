#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace lyapshape::cli {

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string csv;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n;
    std::optional<std::uint64_t> replicas;
    std::optional<std::uint64_t> renorm_every;
    std::optional<double> zero_tol;
    bool text = false;
    bool spectrum = false;
    double beta_shift = 0.0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::InvalidArgument, "cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::uint64_t read_u64(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    throw ConfigError(Errc::ParseError, "expected a nonnegative integer", path);
}

double read_nonneg(const Json& j, const std::string& path) {
    if (!j.is_number() || !(j.get<double>() >= 0.0)) {
        throw ConfigError(Errc::ParseError, "expected a nonnegative number", path);
    }
    return j.get<double>();
}

template <class Fn>
void stage(std::vector<Check>* checks, const std::string& name, Fn fn) {
    try {
        fn();
    } catch (const Error& e) {
        if (checks) checks->push_back({name, false, e.what()});
        throw;
    }
    if (checks) checks->push_back({name, true, {}});
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("LYAPSHAPE_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (errno != 0 || *end != '\0' || s[0] == '-') {
        throw Error(Errc::InvalidArgument, "LYAPSHAPE_SEED is not an unsigned 64-bit integer");
    }
    return static_cast<std::uint64_t>(v);
}

void apply_overrides(AnalysisConfig& cfg, const Flags& f) {
    if (f.n) cfg.n = *f.n;
    if (f.replicas) cfg.replicas = *f.replicas;
    if (f.renorm_every) cfg.renorm_every = *f.renorm_every;
    if (f.zero_tol) cfg.zero_tol = *f.zero_tol;
    if (const auto s = env_seed()) cfg.seed = s;
    if (f.seed) cfg.seed = f.seed;
    if (cfg.n < 1) throw Error(Errc::InvalidArgument, "n must be >= 1");
    if (cfg.replicas < 1) throw Error(Errc::InvalidArgument, "replicas must be >= 1");
    if (cfg.renorm_every < 1) throw Error(Errc::InvalidArgument, "renorm_every must be >= 1");
    if (!(cfg.zero_tol >= 0.0)) throw Error(Errc::InvalidArgument, "zero_tol must be >= 0");
    if (cfg.seed) {
        if (cfg.family) cfg.family = cfg.family->with_seed(*cfg.seed);
        if (cfg.perturbation) cfg.perturbation->seed = *cfg.seed;
    }
}

std::uint64_t renorm(const AnalysisConfig& cfg) { return std::min(cfg.renorm_every, cfg.n); }

MatrixFamily sampling_family(const AnalysisConfig& cfg) {
    if (cfg.family) return *cfg.family;
    if (cfg.perturbation) return perturbation_family(*cfg.perturbation);
    throw ConfigError(Errc::InvalidArgument, "config has neither a family nor a perturbation", "");
}

void emit(const Json& doc, const Flags& f, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (f.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(f.out, std::ios::binary);
    if (!file) throw Error(Errc::InvalidArgument, "cannot write " + f.out);
    file << text;
}

void merge(Json& doc, const Json& extra) {
    for (const auto& [k, v] : extra.items()) doc[k] = v;
}

Json params_json(const AnalysisConfig& cfg) {
    return Json{{"n", cfg.n}, {"replicas", cfg.replicas}, {"renorm_every", renorm(cfg)}};
}

// ---- commands --------------------------------------------------------------

int cmd_validate(const std::string& text, const Flags& f, std::ostream& out) {
    std::vector<Check> checks;
    Json report{{"command", "validate"}, {"config", f.config}};
    auto finish = [&](bool valid) {
        Json list = Json::array();
        for (const auto& c : checks)
            list.push_back(Json{{"name", c.name}, {"outcome", c.passed ? "pass" : "fail"}, {"detail", c.detail}});
        report["valid"] = valid;
        report["checks"] = std::move(list);
        emit(report, f, out);
    };
    try {
        Json doc;
        stage(&checks, "json_syntax", [&] { doc = parse_json_text(text, f.config); });
        AnalysisConfig cfg = load_config(doc, &checks);
        stage(&checks, "overrides", [&] { apply_overrides(cfg, f); });
    } catch (...) {
        finish(false);
        throw;
    }
    finish(true);
    return kOk;
}

void render_graph_text(const ShapeGraph& g, const StructuralReport& r, std::ostream& out) {
    const std::size_t d = g.shape_set().dim();
    out << "shape graph: " << g.vertex_count() << " vertices, " << g.label_count() << " labels\n";
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const std::string bits = g.vertices()[v].to_bitstring();
        out << "v" << v + 1 << "  ";
        for (std::size_t i = 0; i < d; ++i) out << (i ? "/" : "") << bits.substr(i * d, d);
        if (g.zero_vertex() == v) out << "  (zero)";
        if (const auto it = r.loop_label_of.find(v); it != r.loop_label_of.end()) out << "  loop L" << it->second + 1;
        out << "\n";
        for (std::size_t s = 0; s < g.label_count(); ++s) {
            const std::size_t to = g.transition(v, s);
            if (to == v && g.zero_vertex() == v) continue;
            out << "    L" << s + 1 << " -> v" << to + 1 << "\n";
        }
    }
}

int cmd_graph(const AnalysisConfig& cfg, const Flags& f, std::ostream& out) {
    if (!cfg.shape_set) throw ConfigError(Errc::InvalidArgument, "graph needs a shape_set", "");
    const ShapeGraph g = build_shape_graph(*cfg.shape_set);
    const StructuralReport r = analyze_structure(g);
    Json doc{{"command", "graph"}};
    merge(doc, graph_to_json(g, r));
    doc["entropy"] = entropy_to_json(entropy_refinement(g));
    if (f.text) {
        render_graph_text(g, r, out);
        if (!f.out.empty()) emit(doc, f, out);
        return kOk;
    }
    emit(doc, f, out);
    return kOk;
}

void write_csv(const TopExponentTrace& tr, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(Errc::InvalidArgument, "cannot write " + path);
    file << "n,running_estimate";
    for (std::size_t r = 0; r < tr.per_replica.size(); ++r) file << ",replica_" << r + 1;
    file << "\r\n";
    for (std::size_t c = 0; c < tr.checkpoints.size(); ++c) {
        double mean = 0.0;
        for (const auto& rep : tr.per_replica) mean += rep[c];
        mean /= static_cast<double>(tr.per_replica.size());
        file << tr.checkpoints[c] << "," << format_double(mean);
        for (const auto& rep : tr.per_replica) file << "," << format_double(rep[c]);
        file << "\r\n";
    }
}

int cmd_estimate(const AnalysisConfig& cfg, const Flags& f, std::ostream& out) {
    const MatrixFamily fam = sampling_family(cfg);
    std::vector<std::uint64_t> checkpoints;
    if (!f.csv.empty()) {
        const std::uint64_t stride = std::max<std::uint64_t>(1, cfg.n / 200);
        for (std::uint64_t m = stride; m <= cfg.n; m += stride) checkpoints.push_back(m);
        if (checkpoints.empty() || checkpoints.back() != cfg.n) checkpoints.push_back(cfg.n);
    }
    const auto tr = top_exponent_trace(fam, cfg.n, cfg.replicas, renorm(cfg), checkpoints);
    Json doc{{"command", "estimate"},
             {"family", Json{{"kind", std::string(to_string(fam.kind()))},
                             {"dim", fam.dim()},
                             {"seed", fam.seed()},
                             {"deterministic", fam.deterministic()}}},
             {"params", params_json(cfg)},
             {"top_exponent", estimate_to_json(tr.estimate)}};
    if (f.spectrum) {
        Json sp = Json::array();
        for (const auto& e : spectrum(fam, cfg.n, cfg.replicas)) sp.push_back(estimate_to_json(e));
        doc["spectrum"] = std::move(sp);
    }
    if (!f.csv.empty()) write_csv(tr, f.csv);
    emit(doc, f, out);
    return kOk;
}

int cmd_bounds(const AnalysisConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
    if (!cfg.shape_set) throw ConfigError(Errc::InvalidArgument, "bounds needs a shape_set", "");
    if (!cfg.family) throw ConfigError(Errc::InvalidArgument, "bounds needs a family", "");
    McParams p;
    p.n = cfg.n;
    p.replicas = cfg.replicas;
    p.renorm_every = renorm(cfg);
    p.sandwich_tol = cfg.sandwich_tol;
    p.zero_tol = cfg.zero_tol;
    BetaOverride shift;
    if (f.beta_shift != 0.0) {
        shift = [d = f.beta_shift](BetaMap& m) {
            for (auto& [label, e] : m) e.value += d;
        };
    }
    const SandwichRecord rec = bound_sandwich_check(*cfg.family, *cfg.shape_set, p, shift, false);
    Json doc{{"command", "bounds"}, {"params", params_json(cfg)}};
    merge(doc, sandwich_to_json(rec));
    emit(doc, f, out);
    if (!rec.verdict) {
        err << "lyapshape: SandwichViolated: mc_gamma1 = " << format_double(rec.mc_gamma1.value)
            << " outside the reported bounds (tolerance " << format_double(rec.tolerance) << ")\n";
        return kSandwich;
    }
    return kOk;
}

Json mc_containment(const AnalysisConfig& cfg, const BoundReport& b, double extra_se) {
    const MatrixFamily fam = perturbation_family(*cfg.perturbation);
    const auto est = top_exponent(fam, cfg.n, cfg.replicas, renorm(cfg));
    const double tol = 3.0 * std::hypot(est.std_error, extra_se) + cfg.sandwich_tol;
    const bool inside = est.value >= *b.lower - tol && est.value <= *b.upper + tol;
    return Json{{"mc_gamma1", estimate_to_json(est)}, {"tolerance", number_to_json(tol)}, {"contains_mc", inside}};
}

int cmd_perturb(const AnalysisConfig& cfg, const Flags& f, std::ostream& out) {
    if (!cfg.perturbation) throw ConfigError(Errc::InvalidArgument, "perturb needs a perturbation spec", "");
    const PerturbationSpec& spec = *cfg.perturbation;
    const bool identity = !spec.base || spec.base->isIdentity(0.0);
    Json doc{{"command", "perturb"}, {"params", params_json(cfg)}};
    if (spec.rank == 1 && identity) {
        doc["mode"] = "rank_one_spectrum";
        merge(doc, rank_one_to_json(rank_one_spectrum(spec)));
    } else if (spec.rank == 1) {
        doc["mode"] = "rank_one_scaled_bounds";
        const BoundReport b = rank_one_scaled_bounds(spec);
        doc["bounds"] = bound_report_to_json(b);
        merge(doc, mc_containment(cfg, b, 0.0));
    } else if (identity) {
        doc["mode"] = "rank_m_duality";
        merge(doc, duality_to_json(rank_m_duality(spec, cfg.n, cfg.replicas)));
    } else {
        doc["mode"] = "rank_m_scaled_bounds";
        const BoundReport b = rank_m_scaled_bounds(spec, cfg.n, cfg.replicas);
        doc["bounds"] = bound_report_to_json(b);
        merge(doc, mc_containment(cfg, b, *b.component("gamma1_reduced_se")));
    }
    emit(doc, f, out);
    return kOk;
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file")->required();
    sub->add_option("--seed", f.seed, "RNG seed (overrides config and LYAPSHAPE_SEED)");
    sub->add_option("--n", f.n, "steps per replica");
    sub->add_option("--replicas", f.replicas, "independent replicas");
    sub->add_option("--renorm-every", f.renorm_every, "renormalisation cadence");
    sub->add_option("--zero-tol", f.zero_tol, "entries with |x| <= tol count as zero when decomposing");
    sub->add_option("--out", f.out, "write the JSON report here instead of stdout");
    sub->add_option("--csv", f.csv, "write running estimates as CSV (estimate)");
}

} // namespace

int exit_code_for(ErrorClass c) noexcept {
    switch (c) {
    case ErrorClass::Validation: return kValidation;
    case ErrorClass::Assumption: return kAssumption;
    case ErrorClass::Sandwich: return kSandwich;
    case ErrorClass::Numeric: return kNumeric;
    }
    return kNumeric;
}

AnalysisConfig load_config(const Json& doc, std::vector<Check>* checks) {
    AnalysisConfig cfg;
    stage(checks, "document", [&] {
        if (!doc.is_object()) throw ConfigError(Errc::ParseError, "config must be a JSON object", "");
        static const char* known[] = {"family", "shape_set", "perturbation", "estimation", "tolerances", "comment"};
        for (const auto& [k, v] : doc.items()) {
            if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
                throw ConfigError(Errc::ParseError, "unknown key \"" + k + "\"", "/" + k);
            }
        }
        if (doc.contains("family") && doc.contains("perturbation")) {
            throw ConfigError(Errc::InvalidArgument, "exactly one of family and perturbation may drive sampling",
                              "/perturbation");
        }
    });
    if (doc.contains("shape_set")) {
        stage(checks, "shape_set", [&] { cfg.shape_set = shape_set_from_json(doc["shape_set"]); });
    }
    if (doc.contains("family")) {
        stage(checks, "family", [&] { cfg.family = family_from_json(doc["family"], cfg.shape_set); });
    }
    if (cfg.family && cfg.shape_set) {
        stage(checks, "decomposition", [&] {
            if (cfg.family->dim() != cfg.shape_set->dim()) {
                throw ConfigError(Errc::DimensionMismatch, "family dim differs from shape_set dim", "/family/dim");
            }
            for (std::size_t a = 0; a < cfg.family->atoms().size(); ++a) {
                try {
                    (void)decompose(cfg.family->atoms()[a], *cfg.shape_set);
                } catch (const Error& e) {
                    throw ConfigError(e.code(), e.detail(), "/family/atoms/" + std::to_string(a));
                }
            }
        });
    }
    if (doc.contains("perturbation")) {
        stage(checks, "perturbation", [&] { cfg.perturbation = perturbation_from_json(doc["perturbation"]); });
    }
    stage(checks, "estimation", [&] {
        if (const auto it = doc.find("estimation"); it != doc.end()) {
            const Json& e = *it;
            if (!e.is_object()) throw ConfigError(Errc::ParseError, "expected an object", "/estimation");
            if (e.contains("n")) cfg.n = read_u64(e["n"], "/estimation/n");
            if (e.contains("replicas")) cfg.replicas = read_u64(e["replicas"], "/estimation/replicas");
            if (e.contains("renorm_every")) cfg.renorm_every = read_u64(e["renorm_every"], "/estimation/renorm_every");
            if (e.contains("seed")) cfg.seed = read_u64(e["seed"], "/estimation/seed");
        }
        if (cfg.n < 1) throw ConfigError(Errc::InvalidArgument, "n must be >= 1", "/estimation/n");
        if (cfg.replicas < 1) throw ConfigError(Errc::InvalidArgument, "replicas must be >= 1", "/estimation/replicas");
        if (cfg.renorm_every < 1) {
            throw ConfigError(Errc::InvalidArgument, "renorm_every must be >= 1", "/estimation/renorm_every");
        }
    });
    stage(checks, "tolerances", [&] {
        if (const auto it = doc.find("tolerances"); it != doc.end()) {
            const Json& t = *it;
            if (!t.is_object()) throw ConfigError(Errc::ParseError, "expected an object", "/tolerances");
            if (t.contains("zero_tol")) cfg.zero_tol = read_nonneg(t["zero_tol"], "/tolerances/zero_tol");
            if (t.contains("sandwich_tol")) cfg.sandwich_tol = read_nonneg(t["sandwich_tol"], "/tolerances/sandwich_tol");
        }
    });
    return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lyapunov exponents and shape-graph bounds for structured matrix products", "lyapshape"};
    app.require_subcommand(1);
    Flags f;
    CLI::App* validate = app.add_subcommand("validate", "parse and check a config");
    CLI::App* graph = app.add_subcommand("graph", "shape graph and structural report");
    CLI::App* estimate = app.add_subcommand("estimate", "Monte Carlo top exponent");
    CLI::App* bounds = app.add_subcommand("bounds", "shape-graph bounds with a Monte Carlo sandwich check");
    CLI::App* perturb = app.add_subcommand("perturb", "rank-one / rank-m perturbation formulas");
    for (CLI::App* sub : {validate, graph, estimate, bounds, perturb}) add_common(sub, f);
    graph->add_flag("--text", f.text, "print a text rendering instead of JSON on stdout");
    estimate->add_flag("--spectrum", f.spectrum, "also estimate the full spectrum by QR");
    bounds->add_option("--debug-beta-shift", f.beta_shift, "add a constant to every loop exponent (testing)")
        ->group("");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    std::string text;
    try {
        text = read_file(f.config);
        if (validate->parsed()) return cmd_validate(text, f, out);
        AnalysisConfig cfg = load_config(parse_json_text(text, f.config));
        apply_overrides(cfg, f);
        if (graph->parsed()) return cmd_graph(cfg, f, out);
        if (estimate->parsed()) return cmd_estimate(cfg, f, out);
        if (bounds->parsed()) return cmd_bounds(cfg, f, out, err);
        return cmd_perturb(cfg, f, out);
    } catch (const ConfigError& e) {
        err << "lyapshape: " << e.what();
        if (const auto line = locate_line(text, e.pointer()); line > 0) err << ", line " << line;
        err << "\n";
        return exit_code_for(exit_class(e.code()));
    } catch (const Error& e) {
        err << "lyapshape: " << e.what() << "\n";
        return exit_code_for(exit_class(e.code()));
    } catch (const std::exception& e) {
        err << "lyapshape: internal error: " << e.what() << "\n";
        return kNumeric;
    }
}

} // namespace lyapshape::cli
