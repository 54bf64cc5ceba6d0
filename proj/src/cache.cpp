#include "homstokes/cache.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "homstokes/errors.hpp"

namespace homstokes {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[k])) << (8 * k);
    return v;
}

void put_block(std::string& out, const std::string& name, const std::vector<double>& values) {
    out += name;
    out += '\n';
    put_u64(out, values.size());
    for (double d : values) put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class BlockReader {
public:
    explicit BlockReader(std::string data) : d_(std::move(data)) {}

    std::optional<std::string> line() {
        const auto nl = d_.find('\n', pos_);
        if (nl == std::string::npos) return std::nullopt;
        std::string s = d_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return s;
    }

    /// Reads a block called `name`; nullopt on any mismatch.
    std::optional<std::vector<double>> block(const std::string& name, std::size_t expected) {
        const auto n = line();
        if (!n || *n != name) return std::nullopt;
        if (d_.size() < pos_ + 8) return std::nullopt;
        const std::uint64_t count = get_u64(d_.data() + pos_);
        pos_ += 8;
        if (count != expected || d_.size() < pos_ + 8 * count) return std::nullopt;
        std::vector<double> v(count);
        for (std::size_t k = 0; k < count; ++k) v[k] = std::bit_cast<double>(get_u64(d_.data() + pos_ + 8 * k));
        pos_ += 8 * count;
        return v;
    }

    [[nodiscard]] bool at_end_marker() { return line() == std::optional<std::string>("END") && pos_ == d_.size(); }

private:
    std::string d_;
    std::size_t pos_ = 0;
};

std::optional<std::string> slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const fs::path& file, const std::string& bytes) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    fs::path tmp = file;
    tmp += ".tmp" + std::to_string(std::hash<std::string>{}(bytes) & 0xffffff);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, file);
}

const char* field_names[2] = {"chi", "pi"};

std::string block_name(const char* what, bool adjoint, int j, int beta) {
    return std::string(what) + (adjoint ? "_adj" : "") + "_" + std::to_string(j + 1) + std::to_string(beta + 1);
}

}  // namespace

CacheKey CacheKey::from(const CoefficientTensor& A, const CellGrid& grid, double tol) {
    return CacheKey{A.family(), A.canonical_params(), grid.N, tol};
}

std::string CacheKey::header() const {
    return "HSCACHE v1 " + std::string(family_name(family)) + " " + params + " " + std::to_string(N) + " " +
           fmt17(tol);
}

std::uint64_t CacheKey::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : header()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string CacheKey::filename() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_N%d_%016llx.hscache", std::string(family_name(family)).c_str(), N,
                  static_cast<unsigned long long>(hash()));
    return buf;
}

void write_corrector_cache(const fs::path& file, const CacheKey& key, const CorrectorSet& c) {
    if (!c.adjoint) throw ValidationError("cache entries must carry adjoint correctors");
    std::string out = key.header() + "\n";
    for (int adj = 0; adj < 2; ++adj) {
        const CorrectorFields& f = adj ? *c.adjoint : c.primal;
        for (int j = 0; j < 2; ++j)
            for (int be = 0; be < 2; ++be) {
                put_block(out, block_name(field_names[0], adj, j, be), f.chi[jb(j, be)].data);
                put_block(out, block_name(field_names[1], adj, j, be), f.pi[jb(j, be)].data);
            }
        std::vector<double> meta;
        for (int k = 0; k < 4; ++k) {
            meta.push_back(f.momentum_residual[k]);
            meta.push_back(f.divergence_residual[k]);
            meta.push_back(f.iterations[k]);
        }
        put_block(out, adj ? "residuals_adj" : "residuals", meta);
    }
    out += "END\n";
    atomic_write(file, out);
}

std::optional<CorrectorSet> read_corrector_cache(const fs::path& file, const CacheKey& key) {
    auto bytes = slurp(file);
    if (!bytes) return std::nullopt;
    BlockReader r(std::move(*bytes));
    if (r.line() != std::optional<std::string>(key.header())) return std::nullopt;
    CorrectorSet c;
    c.grid = CellGrid{key.N};
    c.tol = key.tol;
    const std::size_t nv = static_cast<std::size_t>(key.N) * key.N;
    for (int adj = 0; adj < 2; ++adj) {
        CorrectorFields f;
        for (int j = 0; j < 2; ++j)
            for (int be = 0; be < 2; ++be) {
                auto chi = r.block(block_name(field_names[0], adj, j, be), 2 * nv);
                if (!chi) return std::nullopt;
                auto pi = r.block(block_name(field_names[1], adj, j, be), nv / 4);
                if (!pi) return std::nullopt;
                f.chi[jb(j, be)] = PeriodicField(key.N, 2);
                f.chi[jb(j, be)].data = std::move(*chi);
                f.pi[jb(j, be)] = PeriodicField(key.N / 2, 1);
                f.pi[jb(j, be)].data = std::move(*pi);
            }
        auto meta = r.block(adj ? "residuals_adj" : "residuals", 12);
        if (!meta) return std::nullopt;
        for (int k = 0; k < 4; ++k) {
            f.momentum_residual[k] = (*meta)[3 * k];
            f.divergence_residual[k] = (*meta)[3 * k + 1];
            f.iterations[k] = static_cast<int>((*meta)[3 * k + 2]);
        }
        if (adj) {
            c.adjoint = std::move(f);
        } else {
            c.primal = std::move(f);
        }
    }
    if (!r.at_end_marker()) return std::nullopt;
    return c;
}

CorrectorSet cache_roundtrip(const CorrectorSet& c, const CacheKey& key, const fs::path& dir) {
    const fs::path file = dir / key.filename();
    write_corrector_cache(file, key, c);
    auto back = read_corrector_cache(file, key);
    if (!back) throw Error("cache roundtrip failed for " + file.string());
    return *back;
}

CorrectorSet load_or_compute_correctors(const CoefficientTensor& A, const CellGrid& grid, double tol,
                                        const fs::path& dir, bool* hit) {
    const CacheKey key = CacheKey::from(A, grid, tol);
    if (hit) *hit = false;
    if (!dir.empty()) {
        if (auto c = read_corrector_cache(dir / key.filename(), key)) {
            if (hit) *hit = true;
            return *c;
        }
    }
    CorrectorSet c = compute_correctors(A, grid, tol, true);
    if (!dir.empty()) write_corrector_cache(dir / key.filename(), key, c);
    return c;
}

void write_solution(const fs::path& file, const DomainField& field, double epsilon) {
    std::string out = "HSSOL v1 " + std::to_string(field.grid.M) + " " + fmt17(epsilon) + "\n";
    put_block(out, "u1", field.u1);
    put_block(out, "u2", field.u2);
    put_block(out, "p", field.p);
    out += "END\n";
    atomic_write(file, out);
}

std::optional<DomainField> read_solution(const fs::path& file, double* epsilon) {
    auto bytes = slurp(file);
    if (!bytes) return std::nullopt;
    BlockReader r(std::move(*bytes));
    const auto head = r.line();
    if (!head) return std::nullopt;
    std::istringstream hs(*head);
    std::string magic, version;
    int M = 0;
    double eps = 0.0;
    if (!(hs >> magic >> version >> M >> eps) || magic != "HSSOL" || version != "v1" || M < 2 || M % 2) {
        return std::nullopt;
    }
    DomainField f(DomainGrid{M});
    auto u1 = r.block("u1", f.u1.size());
    auto u2 = u1 ? r.block("u2", f.u2.size()) : std::nullopt;
    auto p = u2 ? r.block("p", f.p.size()) : std::nullopt;
    if (!p || !r.at_end_marker()) return std::nullopt;
    f.u1 = std::move(*u1);
    f.u2 = std::move(*u2);
    f.p = std::move(*p);
    if (epsilon) *epsilon = eps;
    return f;
}

}  // namespace homstokes
