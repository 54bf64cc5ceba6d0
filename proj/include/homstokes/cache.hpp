#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "homstokes/cell.hpp"
#include "homstokes/coefficient.hpp"
#include "homstokes/domain.hpp"

namespace homstokes {

struct CacheKey {
    Family family = Family::Constant;
    std::string params;  ///< canonical_params() of the coefficient
    int N = 0;
    double tol = 0.0;

    [[nodiscard]] static CacheKey from(const CoefficientTensor& A, const CellGrid& grid, double tol);
    /// `HSCACHE v1 <family> <params> <N> <tol>`
    [[nodiscard]] std::string header() const;
    /// FNV-1a of the header line.
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] std::string filename() const;
    friend bool operator==(const CacheKey& a, const CacheKey& b) { return a.header() == b.header(); }
};

/// Atomic write (temp file + rename). Requires correctors.adjoint.
void write_corrector_cache(const std::filesystem::path& file, const CacheKey& key, const CorrectorSet& correctors);
/// Any mismatch, truncation or malformed block is a miss.
[[nodiscard]] std::optional<CorrectorSet> read_corrector_cache(const std::filesystem::path& file, const CacheKey& key);
/// Write to dir / key.filename() and read it back.
[[nodiscard]] CorrectorSet cache_roundtrip(const CorrectorSet& correctors, const CacheKey& key,
                                           const std::filesystem::path& dir);

/// Cached correctors for A when present in dir, otherwise computed (and stored
/// when dir is non-empty). `hit` reports which path was taken.
[[nodiscard]] CorrectorSet load_or_compute_correctors(const CoefficientTensor& A, const CellGrid& grid, double tol,
                                                      const std::filesystem::path& dir, bool* hit = nullptr);

/// `HSSOL v1 <M> <epsilon>` followed by blocks u1, u2, p.
void write_solution(const std::filesystem::path& file, const DomainField& field, double epsilon);
[[nodiscard]] std::optional<DomainField> read_solution(const std::filesystem::path& file, double* epsilon = nullptr);

}  // namespace homstokes
