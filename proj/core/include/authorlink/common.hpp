#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace authorlink {

// Bad invocation: unknown flags, malformed parameter combinations. CLI exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

// Bad or missing data: unreadable files, violated preconditions. CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// FNV-1a, used for content hashes and derived seeds. Not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h);

// Deterministic sampling helpers. std::mt19937_64 is fully specified by the
// standard but the distributions are not, so all mappings are done by hand.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // uniform in [0, n)
    std::uint64_t index(std::uint64_t n) {
        // multiply-shift; bias is < 2^-64 per draw, irrelevant here
        unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    // uniform in [0, 1) with 53 random bits
    double real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double range(double lo, double hi) { return lo + (hi - lo) * real(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

// Shortest round-trip decimal text for a double; locale-free.
std::string dtos(double v);
double stod_strict(std::string_view s, const char* what);
long stol_strict(std::string_view s, const char* what);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Iterations must write
// disjoint state. Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// Cosine similarity; either vector all-zero yields 0.
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace authorlink
