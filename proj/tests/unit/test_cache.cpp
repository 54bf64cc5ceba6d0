#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "homstokes/cache.hpp"
#include "homstokes/errors.hpp"

using namespace homstokes;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("homstokes_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CorrectorSet random_set(int N) {
    std::mt19937_64 rng(N);
    std::normal_distribution<double> n(0.0, 1.0);
    CorrectorSet c;
    c.grid = CellGrid::make(N);
    c.tol = 1e-9;
    for (int adj = 0; adj < 2; ++adj) {
        CorrectorFields f;
        for (int k = 0; k < 4; ++k) {
            f.chi[k] = PeriodicField(N, 2);
            f.pi[k] = PeriodicField(N / 2, 1);
            for (double& v : f.chi[k].data) v = n(rng);
            for (double& v : f.pi[k].data) v = n(rng) * 1e-300;  // subnormals survive too
            f.momentum_residual[k] = std::abs(n(rng));
            f.divergence_residual[k] = std::abs(n(rng));
            f.iterations[k] = 10 + k;
        }
        if (adj) {
            c.adjoint = f;
        } else {
            c.primal = f;
        }
    }
    return c;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

const CoefficientTensor& laminate() {
    static const CoefficientTensor A = build_coefficient(Family::Laminate, std::vector<double>{2, 1});
    return A;
}

}  // namespace

TEST(CacheKey, CanonicalSerialization) {
    const auto k = CacheKey::from(laminate(), CellGrid::make(64), 1e-9);
    EXPECT_EQ(k.header(), "HSCACHE v1 laminate 2,1 64 1.0000000000000001e-09");
    const auto k2 = CacheKey::from(build_coefficient(Family::Laminate, std::vector<double>{2, 1}), CellGrid::make(64), 1e-9);
    EXPECT_TRUE(k == k2);
    EXPECT_EQ(k.hash(), k2.hash());
    const auto k3 = CacheKey::from(build_coefficient(Family::Laminate, std::vector<double>{2, 0.5}), CellGrid::make(64), 1e-9);
    EXPECT_FALSE(k == k3);
    EXPECT_NE(k.filename(), k3.filename());
}

TEST(Cache, RoundtripIsBitwise) {
    const auto dir = scratch("roundtrip");
    const auto set = random_set(16);
    const auto key = CacheKey::from(laminate(), set.grid, set.tol);
    const auto back = cache_roundtrip(set, key, dir);
    for (int k = 0; k < 4; ++k) {
        EXPECT_TRUE(bitwise_equal(back.primal.chi[k].data, set.primal.chi[k].data));
        EXPECT_TRUE(bitwise_equal(back.primal.pi[k].data, set.primal.pi[k].data));
        EXPECT_TRUE(bitwise_equal(back.adjoint->chi[k].data, set.adjoint->chi[k].data));
        EXPECT_TRUE(bitwise_equal(back.adjoint->pi[k].data, set.adjoint->pi[k].data));
        EXPECT_EQ(back.primal.iterations[k], set.primal.iterations[k]);
        EXPECT_EQ(back.primal.momentum_residual[k], set.primal.momentum_residual[k]);
    }
    fs::remove_all(dir);
}

TEST(Cache, CorruptionIsAMiss) {
    const auto dir = scratch("corrupt");
    const auto set = random_set(16);
    const auto key = CacheKey::from(laminate(), set.grid, set.tol);
    const fs::path file = dir / key.filename();
    write_corrector_cache(file, key, set);
    const std::string good = slurp(file);
    ASSERT_TRUE(read_corrector_cache(file, key).has_value());

    std::string v0 = good;
    v0.replace(v0.find(" v1 "), 4, " v0 ");
    spit(file, v0);
    EXPECT_FALSE(read_corrector_cache(file, key).has_value());

    spit(file, good.substr(0, good.size() / 2));
    EXPECT_FALSE(read_corrector_cache(file, key).has_value());

    spit(file, good.substr(0, good.size() - 4));  // END marker missing
    EXPECT_FALSE(read_corrector_cache(file, key).has_value());

    spit(file, good + "extra");
    EXPECT_FALSE(read_corrector_cache(file, key).has_value());

    spit(file, good);
    auto other = key;
    other.params = "2,0.5";
    EXPECT_FALSE(read_corrector_cache(file, other).has_value());
    other = key;
    other.tol = 1e-8;
    EXPECT_FALSE(read_corrector_cache(file, other).has_value());
    EXPECT_FALSE(read_corrector_cache(dir / "absent.hscache", key).has_value());
    fs::remove_all(dir);
}

TEST(Cache, LoadOrComputeUsesCache) {
    const auto dir = scratch("load");
    bool hit = true;
    const auto a = load_or_compute_correctors(laminate(), CellGrid::make(16), 1e-10, dir, &hit);
    EXPECT_FALSE(hit);
    const auto b = load_or_compute_correctors(laminate(), CellGrid::make(16), 1e-10, dir, &hit);
    EXPECT_TRUE(hit);
    for (int k = 0; k < 4; ++k) EXPECT_TRUE(bitwise_equal(a.primal.chi[k].data, b.primal.chi[k].data));
    // no temp files left behind
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        ++files;
        EXPECT_EQ(e.path().extension(), ".hscache");
    }
    EXPECT_EQ(files, 1);
    fs::remove_all(dir);
}

TEST(SolutionDump, Roundtrip) {
    const auto dir = scratch("sol");
    DomainField f(DomainGrid::make(16));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto* v : {&f.u1, &f.u2, &f.p})
        for (double& x : *v) x = n(rng);
    write_solution(dir / "s.hssol", f, 0.125);
    double eps = 0.0;
    const auto back = read_solution(dir / "s.hssol", &eps);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(eps, 0.125);
    EXPECT_TRUE(bitwise_equal(back->u1, f.u1));
    EXPECT_TRUE(bitwise_equal(back->u2, f.u2));
    EXPECT_TRUE(bitwise_equal(back->p, f.p));
    EXPECT_EQ(slurp(dir / "s.hssol").substr(0, 17), "HSSOL v1 16 0.125");
    fs::remove_all(dir);
}
