#include <dic/io.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include <dic/errors.hpp>

#include "hash.hpp"

namespace dic::io {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        DIC_THROW(ValidationError, "cannot open " << path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        DIC_THROW(ValidationError, "cannot write " << path);
    out << contents;
    if (!out)
        DIC_THROW(ValidationError, "write to " << path << " failed");
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

namespace {

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object())
        DIC_THROW(ValidationError, where << ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            known = known || key == a;
        if (!known)
            DIC_THROW(ValidationError, where << ": unknown field \"" << key << "\"");
    }
}

const json& field(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        DIC_THROW(ValidationError, where << ": missing field \"" << key << "\"");
    return *it;
}

double number(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_number())
        DIC_THROW(ValidationError, where << ": field \"" << key << "\" must be a number");
    return v.get<double>();
}

std::string text(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_string())
        DIC_THROW(ValidationError, where << ": field \"" << key << "\" must be a string");
    return v.get<std::string>();
}

const json& array(const json& j, const char* key, const std::string& where) {
    const json& v = field(j, key, where);
    if (!v.is_array())
        DIC_THROW(ValidationError, where << ": field \"" << key << "\" must be an array");
    return v;
}

std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array())
        DIC_THROW(ValidationError, where << ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number())
            DIC_THROW(ValidationError, where << ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> matrix(const json& v, const std::string& where) {
    if (!v.is_array())
        DIC_THROW(ValidationError, where << ": expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : v)
        out.push_back(numbers(row, where));
    return out;
}

json parse_json(const std::string& text, const char* what) {
    try {
        // comments allowed so generated documents can carry the "//" report header
        return json::parse(text, nullptr, true, true);
    } catch (const json::exception& e) {
        DIC_THROW(ValidationError, what << ": malformed JSON (" << e.what() << ")");
    }
}

const json& top_array(const json& j, const char* what) {
    if (!j.is_array())
        DIC_THROW(ValidationError, what << ": expected a top-level array");
    return j;
}

std::string at(const char* what, std::size_t i) { return std::string(what) + "[" + std::to_string(i) + "]"; }

} // namespace

CurveSet parse_curves(const std::string& text_in) {
    const json j = parse_json(text_in, "curves");
    CurveSet out;
    std::size_t i = 0;
    for (const auto& c : top_array(j, "curves")) {
        const std::string where = at("curves", i++);
        only_keys(c, {"issuer_id", "pillars"}, where);
        std::vector<CurvePillar> pillars;
        for (const auto& p : array(c, "pillars", where)) {
            only_keys(p, {"tenor", "pd"}, where + ".pillars");
            pillars.push_back({number(p, "tenor", where), number(p, "pd", where)});
        }
        const std::string id = text(c, "issuer_id", where);
        if (!out.emplace(id, CreditCurve(id, std::move(pillars))).second)
            DIC_THROW(ValidationError, "curves: duplicate issuer " << id);
    }
    return out;
}

Portfolio parse_portfolio(const std::string& text_in) {
    const json j = parse_json(text_in, "portfolio");
    std::vector<Constituent> cs;
    std::size_t i = 0;
    for (const auto& c : top_array(j, "portfolio")) {
        const std::string where = at("portfolio", i++);
        only_keys(c, {"issuer_id", "notional", "recovery", "recovery_override"}, where);
        const json& r = field(c, "recovery", where);
        only_keys(r, {"kind", "rate"}, where + ".recovery");
        const std::string kind = text(r, "kind", where + ".recovery");
        if (kind != "deterministic")
            DIC_THROW(ValidationError, where << ".recovery: kind \"" << kind
                                             << "\" not supported in files (conditional hooks are API-only)");
        Constituent k{text(c, "issuer_id", where), number(c, "notional", where),
                      RecoverySpec::deterministic(number(r, "rate", where + ".recovery")), std::nullopt};
        if (c.contains("recovery_override"))
            k.recovery_override = number(c, "recovery_override", where);
        cs.push_back(std::move(k));
    }
    return Portfolio(std::move(cs));
}

std::vector<MarginalFactorLaw> parse_factors(const std::string& text_in) {
    const json j = parse_json(text_in, "factors");
    std::vector<MarginalFactorLaw> out;
    std::size_t i = 0;
    for (const auto& f : top_array(j, "factors")) {
        const std::string where = at("factors", i++);
        only_keys(f, {"factor_id", "tenors", "support", "probs"}, where);
        out.emplace_back(text(f, "factor_id", where), numbers(array(f, "tenors", where), where),
                         numbers(array(f, "support", where), where), matrix(array(f, "probs", where), where));
    }
    return out;
}

FactorCopula parse_copula(const std::string& text_in) {
    const json j = parse_json(text_in, "copula");
    only_keys(j, {"factor_ids", "correlation"}, "copula");
    std::vector<std::string> ids;
    for (const auto& x : array(j, "factor_ids", "copula")) {
        if (!x.is_string())
            DIC_THROW(ValidationError, "copula: factor_ids must be strings");
        ids.push_back(x.get<std::string>());
    }
    return FactorCopula(std::move(ids), matrix(array(j, "correlation", "copula"), "copula"));
}

std::map<std::string, LinkageSpec> parse_linkage(const std::string& text_in) {
    const json j = parse_json(text_in, "linkage");
    std::map<std::string, LinkageSpec> out;
    std::size_t i = 0;
    for (const auto& l : top_array(j, "linkage")) {
        const std::string where = at("linkage", i++);
        only_keys(l, {"issuer_id", "betas", "alpha"}, where);
        const json& b = field(l, "betas", where);
        if (!b.is_object())
            DIC_THROW(ValidationError, where << ": betas must be an object {factor_id: weight}");
        std::vector<std::pair<std::string, double>> betas;
        for (const auto& [f, w] : b.items()) {
            if (!w.is_number())
                DIC_THROW(ValidationError, where << ": beta for " << f << " must be a number");
            betas.emplace_back(f, w.get<double>());
        }
        const std::string id = text(l, "issuer_id", where);
        if (!out.emplace(id, LinkageSpec(id, std::move(betas), number(l, "alpha", where))).second)
            DIC_THROW(ValidationError, "linkage: duplicate issuer " << id);
    }
    return out;
}

EtlTargetSurface parse_targets(const std::string& text_in) {
    const json j = parse_json(text_in, "targets");
    only_keys(j, {"index_id", "tranches", "tenors", "etl", "weights"}, "targets");
    EtlTargetSurface t;
    t.index_id = text(j, "index_id", "targets");
    for (const auto& tr : array(j, "tranches", "targets")) {
        only_keys(tr, {"attach", "detach"}, "targets.tranches");
        t.tranches.push_back({number(tr, "attach", "targets.tranches"), number(tr, "detach", "targets.tranches")});
    }
    t.tenors = numbers(array(j, "tenors", "targets"), "targets.tenors");
    t.etl = matrix(array(j, "etl", "targets"), "targets.etl");
    if (j.contains("weights"))
        t.weights = matrix(array(j, "weights", "targets"), "targets.weights");
    return t;
}

std::vector<TrancheSpec> parse_tranches(const std::string& text_in) {
    const json j = parse_json(text_in, "tranches");
    std::vector<TrancheSpec> out;
    std::size_t i = 0;
    for (const auto& tr : top_array(j, "tranches")) {
        const std::string where = at("tranches", i++);
        only_keys(tr, {"attach", "detach", "maturity", "payment_grid"}, where);
        const double a = number(tr, "attach", where), d = number(tr, "detach", where),
                     m = number(tr, "maturity", where);
        if (tr.contains("payment_grid"))
            out.emplace_back(a, d, m, numbers(tr["payment_grid"], where));
        else
            out.emplace_back(a, d, m);
    }
    return out;
}

std::string dump_curves(const CurveSet& curves) {
    json j = json::array();
    for (const auto& [id, c] : curves) {
        json pillars = json::array();
        for (const auto& p : c.pillars())
            pillars.push_back({{"tenor", p.tenor}, {"pd", p.default_probability}});
        j.push_back({{"issuer_id", id}, {"pillars", pillars}});
    }
    return j.dump(1);
}

std::string dump_portfolio(const Portfolio& portfolio) {
    json j = json::array();
    for (const auto& c : portfolio.constituents()) {
        DIC_REQUIRE(c.recovery.is_deterministic(), "dump_portfolio: conditional recovery cannot be serialized");
        json e = {{"issuer_id", c.issuer_id},
                  {"notional", c.notional},
                  {"recovery", {{"kind", "deterministic"}, {"rate", c.recovery.rate()}}}};
        if (c.recovery_override)
            e["recovery_override"] = *c.recovery_override;
        j.push_back(std::move(e));
    }
    return j.dump(1);
}

std::string dump_factors(const std::vector<MarginalFactorLaw>& laws) {
    json j = json::array();
    for (const auto& l : laws)
        j.push_back({{"factor_id", l.factor_id()},
                     {"tenors", l.tenors()},
                     {"support", l.support()},
                     {"probs", l.all_probs()}});
    return j.dump(1);
}

std::string dump_copula(const FactorCopula& copula) {
    return json{{"factor_ids", copula.factor_ids()}, {"correlation", copula.correlation()}}.dump(1);
}

std::string dump_linkage(const std::map<std::string, LinkageSpec>& specs) {
    json j = json::array();
    for (const auto& [id, s] : specs) {
        json betas = json::object();
        for (const auto& [f, b] : s.betas())
            betas[f] = b;
        j.push_back({{"issuer_id", id}, {"betas", betas}, {"alpha", s.alpha()}});
    }
    return j.dump(1);
}

std::string dump_targets(const EtlTargetSurface& t) {
    json tranches = json::array();
    for (const auto& tr : t.tranches)
        tranches.push_back({{"attach", tr.attach}, {"detach", tr.detach}});
    json j = {{"index_id", t.index_id}, {"tranches", tranches}, {"tenors", t.tenors}, {"etl", t.etl}};
    if (!t.weights.empty())
        j["weights"] = t.weights;
    return j.dump(1);
}

std::string dump_tranches(const std::vector<TrancheSpec>& tranches) {
    json j = json::array();
    for (const auto& tr : tranches) {
        json e = {{"attach", tr.attach}, {"detach", tr.detach}, {"maturity", tr.maturity}};
        if (tr.payment_grid != quarterly_grid(tr.maturity))
            e["payment_grid"] = tr.payment_grid;
        j.push_back(std::move(e));
    }
    return j.dump(1);
}

std::string dump_linkage_points(const std::map<std::string, LinkagePoint>& entries) {
    json e = json::object();
    for (const auto& [k, p] : entries)
        e[k] = {{"t", p.t},         {"p", p.p},
                {"h", p.h},         {"alpha", p.alpha},
                {"gamma", p.gamma}, {"b", p.b},
                {"tilted_mean", p.tilted_mean}, {"residual", p.residual}};
    return json{{"version", 1}, {"entries", e}}.dump(1);
}

std::map<std::string, LinkagePoint> parse_linkage_points(const std::string& text_in) {
    const json j = parse_json(text_in, "linkage cache");
    only_keys(j, {"version", "entries"}, "linkage cache");
    if (number(j, "version", "linkage cache") != 1)
        DIC_THROW(ValidationError, "linkage cache: unsupported version");
    std::map<std::string, LinkagePoint> out;
    const json& e = field(j, "entries", "linkage cache");
    if (!e.is_object())
        DIC_THROW(ValidationError, "linkage cache: entries must be an object");
    for (const auto& [k, v] : e.items()) {
        const std::string where = "linkage cache entry " + k;
        only_keys(v, {"t", "p", "h", "alpha", "gamma", "b", "tilted_mean", "residual"}, where);
        LinkagePoint p;
        p.t = number(v, "t", where);
        p.p = number(v, "p", where);
        p.h = number(v, "h", where);
        p.alpha = number(v, "alpha", where);
        p.gamma = number(v, "gamma", where);
        p.b = number(v, "b", where);
        p.tilted_mean = number(v, "tilted_mean", where);
        p.residual = number(v, "residual", where);
        out.emplace(k, p);
    }
    return out;
}

void ReportHeader::write(std::ostream& out, const char* prefix) const {
    out << prefix << "tool: " << tool_version << "\n";
    out << prefix << "command: " << command << "\n";
    for (const auto& [name, hash] : inputs)
        out << prefix << "input " << name << ": fnv1a64 " << hash << "\n";
    out << prefix << "seed: " << seed << "\n";
    out << prefix << "n_paths: " << n_paths << "\n";
    for (const auto& [k, v] : extra)
        out << prefix << k << ": " << v << "\n";
}

void write_etl_csv(std::ostream& out, const std::vector<TrancheSpec>& tranches, const std::vector<EtlCurve>& curves) {
    out << "attach,detach,t,etl,stderr\n";
    for (std::size_t i = 0; i < tranches.size(); ++i)
        for (const auto& p : curves.at(i).points)
            out << fmt(tranches[i].attach) << ',' << fmt(tranches[i].detach) << ',' << fmt(p.t) << ',' << fmt(p.etl)
                << ',' << fmt(p.std_error) << '\n';
}

void write_delta_csv(std::ostream& out, const std::vector<DeltaReport>& reports) {
    out << "t,attach,detach,issuer_id,hedge_ratio,stderr\n";
    for (const auto& r : reports)
        for (const auto& n : r.names)
            out << fmt(r.t) << ',' << fmt(r.attach) << ',' << fmt(r.detach) << ',' << n.issuer_id << ','
                << fmt(n.hedge_ratio) << ',' << fmt(n.std_error) << '\n';
}

void write_calibration_csv(std::ostream& out, const EtlTargetSurface& targets, const CalibrationReport& report,
                           bool column_names) {
    if (column_names)
        out << "index_id,attach,detach,tenor,target,fit,error\n";
    for (std::size_t i = 0; i < targets.tranches.size(); ++i)
        for (std::size_t k = 0; k < targets.tenors.size(); ++k)
            out << targets.index_id << ',' << fmt(targets.tranches[i].attach) << ','
                << fmt(targets.tranches[i].detach) << ',' << fmt(targets.tenors[k]) << ','
                << fmt(targets.etl[i][k]) << ',' << fmt(report.model_etl[i][k]) << ',' << fmt(report.error[i][k])
                << '\n';
}

void write_scenarios_csv(std::ostream& out, const Portfolio& portfolio, const std::vector<DefaultScenario>& scenarios) {
    out << "path,issuer_id,default_time,recovery\n";
    for (const auto& s : scenarios)
        for (std::size_t j = 0; j < s.default_times.size(); ++j)
            if (s.default_times[j] != kNoDefault)
                out << s.path << ',' << portfolio.constituents()[j].issuer_id << ',' << fmt(s.default_times[j]) << ','
                    << fmt(s.recoveries[j]) << '\n';
}

} // namespace dic::io
