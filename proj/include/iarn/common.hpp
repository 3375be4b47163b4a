#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace iarn {

// Error hierarchy; the CLI maps these to process exit codes
// (usage -> 2, I/O -> 3, numeric divergence -> 4).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

class GraphError : public Error {
public:
    explicit GraphError(const std::string& msg) : Error("graph error: " + msg) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public UsageError {
public:
    explicit ConfigError(const std::string& msg) : UsageError("config error: " + msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error("divergence: " + msg) {}
};

// Seeded RNG with explicit value derivation so sequences are identical on
// every platform (std::uniform_real_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

    // [0, n)
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(next_unit() * static_cast<double>(n));
    }

    bool coin() { return (engine_() & 1u) != 0; }

    // Box-Muller, always consumes two draws.
    double normal() {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

inline int round_half_up(double x) {
    return static_cast<int>(std::floor(x + 0.5));
}

}  // namespace iarn
