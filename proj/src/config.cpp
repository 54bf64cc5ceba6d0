#include "homstokes/config.hpp"

#include <cmath>
#include <set>

#include "homstokes/errors.hpp"
#include "homstokes/toml.hpp"

namespace homstokes {

bool RateGates::any() const {
    return min_slope_l2_u || max_slope_l2_u || min_r2_l2_u || min_slope_h1_twoscale || min_slope_l2_pressure ||
           min_slope_l2_w || min_slope_h1_w || max_bl_const || max_error || monotone;
}

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

CoefficientTensor StudyConfig::coefficient() const { return build_coefficient(family, params); }

int StudyConfig::domain_resolution(double eps) const {
    const double raw = std::ceil(grid_factor / eps - 1e-9);
    long long M = 32;
    while (M < raw) M *= 2;
    return static_cast<int>(M);
}

namespace {

using toml::Document;
using toml::Value;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ValidationError("config key '" + key + "': " + what);
}

class Reader {
public:
    explicit Reader(Document d) : doc_(std::move(d)) {}

    const Value* find(const std::string& key) {
        used_.insert(key);
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &it->second;
    }

    static double as_double(const std::string& key, const Value& v) {
        if (v.kind == Value::Kind::Float) return v.d;
        if (v.kind == Value::Kind::Int) return static_cast<double>(v.i);
        bad(key, "expected a number, got " + std::string(v.kind_name()));
    }
    static long long as_int(const std::string& key, const Value& v) {
        if (v.kind != Value::Kind::Int) bad(key, "expected an integer, got " + std::string(v.kind_name()));
        return v.i;
    }

    void number(const std::string& key, double& out) {
        if (const Value* v = find(key)) out = as_double(key, *v);
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (const Value* v = find(key)) out = as_double(key, *v);
    }
    void integer(const std::string& key, int& out) {
        if (const Value* v = find(key)) {
            const long long i = as_int(key, *v);
            if (i < -(1ll << 30) || i > (1ll << 30)) bad(key, "out of range");
            out = static_cast<int>(i);
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const Value* v = find(key)) {
            if (v->kind != Value::Kind::Bool) bad(key, "expected a boolean, got " + std::string(v->kind_name()));
            out = v->b;
        }
    }
    std::optional<std::string> string(const std::string& key) {
        const Value* v = find(key);
        if (!v) return std::nullopt;
        if (v->kind != Value::Kind::String) bad(key, "expected a string, got " + std::string(v->kind_name()));
        return v->s;
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        const Value* v = find(key);
        if (!v) return;
        if (v->kind != Value::Kind::Array) bad(key, "expected an array, got " + std::string(v->kind_name()));
        out.clear();
        for (const Value& it : v->items) out.push_back(as_double(key, it));
    }
    void integers(const std::string& key, std::vector<int>& out) {
        const Value* v = find(key);
        if (!v) return;
        if (v->kind != Value::Kind::Array) bad(key, "expected an array, got " + std::string(v->kind_name()));
        out.clear();
        for (const Value& it : v->items) out.push_back(static_cast<int>(as_int(key, it)));
    }

    void reject_unknown() const {
        for (const auto& [k, v] : doc_)
            if (!used_.count(k)) bad(k, "unknown key (line " + std::to_string(v.line) + ")");
    }

private:
    Document doc_;
    std::set<std::string> used_;
};

template <class F>
void parsed(const std::string& key, F&& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        bad(key, e.what());
    }
}

StudyConfig from_document(Document doc) {
    Reader r(std::move(doc));
    StudyConfig c;

    const auto fam = r.string("coefficient.family");
    if (!fam) throw ValidationError("config key 'coefficient.family': missing required key");
    parsed("coefficient.family", [&] { c.family = parse_family(*fam); });
    r.numbers("coefficient.params", c.params);

    r.integer("cell.N", c.N);
    r.number("cell.tol", c.cell_tol);

    r.numbers("study.epsilons", c.epsilons);
    r.number("study.grid_factor", c.grid_factor);
    r.number("study.tol", c.tol);
    if (auto s = r.string("study.recipe")) parsed("study.recipe", [&] { c.recipe = parse_recipe(*s); });
    if (auto s = r.string("study.extension")) parsed("study.extension", [&] { c.extension = parse_extension(*s); });

    if (auto s = r.string("output.dir")) c.out_dir = *s;
    if (auto s = r.string("output.cache")) c.cache_dir = *s;
    r.integer("output.jobs", c.jobs);

    if (auto s = r.string("solve.kind")) {
        if (*s == "fine") {
            c.solve_kind = SolveKind::Fine;
        } else if (*s == "homogenized") {
            c.solve_kind = SolveKind::Homogenized;
        } else {
            bad("solve.kind", "expected \"fine\" or \"homogenized\"");
        }
    }
    r.number("solve.epsilon", c.solve_epsilon);
    r.integer("solve.M", c.solve_M);

    r.integers("mms.grids", c.mms_grids);
    r.number("mms.epsilon", c.mms_epsilon);
    r.number("mms.min_slope", c.mms_min_slope);
    r.number("mms.max_slope", c.mms_max_slope);

    r.numbers("smoothing.epsilons", c.smoothing_epsilons);
    r.integer("smoothing.samples", c.smoothing_samples);

    r.number("identities.factor", c.identities_factor);
    r.number("identities.floor", c.identities_floor);
    r.number("identities.mean_tol", c.identities_mean_tol);

    RateGates& g = c.gates;
    r.number("acceptance.min_slope_l2_u", g.min_slope_l2_u);
    r.number("acceptance.max_slope_l2_u", g.max_slope_l2_u);
    r.number("acceptance.min_r2_l2_u", g.min_r2_l2_u);
    r.number("acceptance.min_slope_h1_twoscale", g.min_slope_h1_twoscale);
    r.number("acceptance.min_slope_l2_pressure", g.min_slope_l2_pressure);
    r.number("acceptance.min_slope_l2_w", g.min_slope_l2_w);
    r.number("acceptance.min_slope_h1_w", g.min_slope_h1_w);
    r.number("acceptance.max_bl_const", g.max_bl_const);
    r.number("acceptance.max_error", g.max_error);
    r.boolean("acceptance.monotone", g.monotone);

    r.reject_unknown();
    c.validate();
    return c;
}

void check_tol(const std::string& key, double t) {
    if (!(t > 0.0 && t <= 1e-4)) bad(key, "tolerance must lie in (0, 1e-4]");
}

}  // namespace

void StudyConfig::validate() const {
    parsed("coefficient.params", [&] { (void)coefficient(); });
    if (!is_power_of_two(N) || N < 32) bad("cell.N", "must be a power of two >= 32, got " + std::to_string(N));
    check_tol("cell.tol", cell_tol);
    check_tol("study.tol", tol);
    if (epsilons.empty()) bad("study.epsilons", "must not be empty");
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        if (!(epsilons[k] > 0.0 && epsilons[k] <= 0.5)) bad("study.epsilons", "values must lie in (0, 1/2]");
        if (k > 0 && !(epsilons[k] < epsilons[k - 1])) bad("study.epsilons", "values must be strictly decreasing");
    }
    if (!(grid_factor > 0.0 && std::isfinite(grid_factor))) bad("study.grid_factor", "must be positive");
    for (double e : epsilons)
        if (domain_resolution(e) > (1 << 14)) bad("study.grid_factor", "domain grid too large");
    if (jobs < 1) bad("output.jobs", "must be at least 1");
    if (!(solve_epsilon > 0.0 && solve_epsilon <= 0.5)) bad("solve.epsilon", "must lie in (0, 1/2]");
    if (!is_power_of_two(solve_M) || solve_M < 32) bad("solve.M", "must be a power of two >= 32");
    if (mms_grids.size() < 2) bad("mms.grids", "needs at least two grids");
    for (std::size_t k = 0; k < mms_grids.size(); ++k) {
        if (!is_power_of_two(mms_grids[k]) || mms_grids[k] < 32) bad("mms.grids", "must be powers of two >= 32");
        if (k > 0 && mms_grids[k] <= mms_grids[k - 1]) bad("mms.grids", "must be strictly increasing");
    }
    if (!(mms_epsilon > 0.0 && mms_epsilon <= 0.5)) bad("mms.epsilon", "must lie in (0, 1/2]");
    if (!(mms_min_slope <= mms_max_slope)) bad("mms.min_slope", "must not exceed mms.max_slope");
    if (smoothing_epsilons.empty()) bad("smoothing.epsilons", "must not be empty");
    for (std::size_t k = 0; k < smoothing_epsilons.size(); ++k) {
        const double e = smoothing_epsilons[k];
        if (!(e > 0.0 && e <= 0.5)) bad("smoothing.epsilons", "values must lie in (0, 1/2]");
        if (k > 0 && !(e < smoothing_epsilons[k - 1])) bad("smoothing.epsilons", "values must be strictly decreasing");
        if (e < 1.0 / 256) bad("smoothing.epsilons", "values below 1/256 are too expensive");
    }
    if (smoothing_samples < 1 || smoothing_samples > 1000) bad("smoothing.samples", "must lie in [1, 1000]");
    if (!(identities_factor > 1.0)) bad("identities.factor", "must exceed 1");
    if (!(identities_floor >= 0.0)) bad("identities.floor", "must be nonnegative");
    if (!(identities_mean_tol > 0.0)) bad("identities.mean_tol", "must be positive");
}

StudyConfig parse_config(const std::string& path) { return from_document(toml::parse_file(path)); }

StudyConfig parse_config_text(const std::string& text) { return from_document(toml::parse(text)); }

}  // namespace homstokes
