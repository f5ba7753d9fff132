#include "fpl/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fpl {

namespace {

void check_same_dim(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw InvalidArgument("vector dimension mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
}

}  // namespace

double dot(const Vec& a, const Vec& b) {
    check_same_dim(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec l2_normalize(const Vec& v) {
    double n = l2_norm(v);
    if (!(n > 1e-12)) throw DegenerateInput("l2_normalize: norm " + std::to_string(n) + " is too small");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

double cosine(const Vec& a, const Vec& b) {
    check_same_dim(a, b);
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (!(na > 1e-12) || !(nb > 1e-12)) throw DegenerateInput("cosine: zero vector");
    double c = dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

Mat softmax_rows(const Mat& m, double temperature) {
    if (!(temperature > 0.0)) throw InvalidArgument("softmax_rows: temperature must be positive");
    Mat out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double mx = -HUGE_VAL;
        for (std::size_t c = 0; c < m.cols; ++c) mx = std::max(mx, m(r, c) / temperature);
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) {
            double e = std::exp(m(r, c) / temperature - mx);
            out(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < m.cols; ++c) out(r, c) /= sum;
    }
    return out;
}

EigResult sym_eig(const Mat& m) {
    if (m.rows != m.cols) throw InvalidArgument("sym_eig: matrix must be square");
    const std::size_t n = m.rows;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-8)
                throw InvalidArgument("sym_eig: matrix is not symmetric within 1e-8");

    Mat a = m;
    // Symmetrize exactly so rounding in the input cannot bias the sweeps.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    Mat v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-26) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) < 1e-30) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigResult res;
    res.values.resize(n);
    res.vectors = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, order[j]);
    }
    return res;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw InvalidArgument("matmul: inner dimension mismatch");
    Mat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Mat matmul_transposed(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw InvalidArgument("matmul_transposed: inner dimension mismatch");
    Mat out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

Mat transpose(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

Vec matvec(const Mat& m, const Vec& v) {
    if (m.cols != v.size()) throw InvalidArgument("matvec: dimension mismatch");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

Vec vecmat(const Vec& v, const Mat& m) {
    if (m.rows != v.size()) throw InvalidArgument("vecmat: dimension mismatch");
    Vec out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += vi * m(i, j);
    }
    return out;
}

void ensure_finite(const Vec& v, std::string_view what) {
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidArgument("non-finite value in " + std::string(what));
}

void ensure_finite(const Mat& m, std::string_view what) {
    for (double x : m.a)
        if (!std::isfinite(x)) throw InvalidArgument("non-finite value in " + std::string(what));
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t x) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[x & 0xf];
        x >>= 4;
    }
    return out;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

SeededRng SeededRng::child(std::string_view label) const {
    // Derived purely from (seed, label); the parent's draw position is irrelevant.
    std::uint64_t h = fnv1a(label);
    std::uint64_t mixed = seed_ ^ (h + 0x9e3779b97f4a7c15ULL + (seed_ << 6) + (seed_ >> 2));
    return SeededRng(mixed);
}

std::uint64_t SeededRng::next_u64() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t SeededRng::uniform_int(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("uniform_int: n must be positive");
    // Rejection sampling keeps the distribution exactly uniform.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_normal_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int SeededRng::sign() { return (next_u64() & 1) ? 1 : -1; }

std::vector<std::size_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw InvalidArgument("sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace fpl
