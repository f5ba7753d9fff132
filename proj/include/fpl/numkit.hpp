#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fpl/errors.hpp"

namespace fpl {

using Vec = std::vector<double>;

// Dense row-major matrix. Values are plain doubles; no view/stride tricks,
// dimensions stay desk-scale (a few hundred at most).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    bool operator==(const Mat&) const = default;
};

double dot(const Vec& a, const Vec& b);
double l2_norm(const Vec& v);

// Unit-norm copy of v. Throws DegenerateInput when the norm is <= 1e-12.
Vec l2_normalize(const Vec& v);

// Cosine similarity, clamped to [-1, 1] so the 1 - cos loss stays in [0, 2].
double cosine(const Vec& a, const Vec& b);

// Row-wise softmax with max-subtraction; each output row sums to 1.
Mat softmax_rows(const Mat& m, double temperature = 1.0);

struct EigResult {
    Vec values;   // sorted descending
    Mat vectors;  // column j is the eigenvector for values[j]
};

// Symmetric eigendecomposition by cyclic Jacobi sweeps. Input must be
// square and symmetric within 1e-8; intended for dimensions <= 64.
EigResult sym_eig(const Mat& m);

// Basic dense products used by the encoders. Shapes are checked.
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_transposed(const Mat& a, const Mat& b);  // a * b^T
Mat transpose(const Mat& m);
Vec matvec(const Mat& m, const Vec& v);
Vec vecmat(const Vec& v, const Mat& m);  // v^T * m

// Throws InvalidArgument when any entry is NaN or infinite.
void ensure_finite(const Vec& v, std::string_view what);
void ensure_finite(const Mat& m, std::string_view what);

// Deterministic xoshiro256** stream. Child streams are derived from the
// construction seed and a label only, so they are independent of how many
// draws the parent has made.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    SeededRng child(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    std::uint64_t uniform_int(std::uint64_t n);  // [0, n), n > 0
    double normal();                           // standard normal, Box-Muller
    int sign();                                // -1 or +1

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t seed_ = 0;
    std::uint64_t s_[4] = {0, 0, 0, 0};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// FNV-1a over a byte string; used for config digests and rng child seeds.
std::uint64_t fnv1a(std::string_view bytes);
std::string to_hex(std::uint64_t x);

}  // namespace fpl
