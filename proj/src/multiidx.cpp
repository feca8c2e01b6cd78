#include "multiidx.hpp"

#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace varjet {

int MultiIndex::modulus() const {
    int s = 0;
    for (int v : e_) s += v;
    return s;
}

bool MultiIndex::leq_entrywise(const MultiIndex& o) const {
    if (e_.size() != o.e_.size()) return false;
    for (std::size_t i = 0; i < e_.size(); ++i)
        if (e_[i] > o.e_[i]) return false;
    return true;
}

MultiIndex MultiIndex::plus(const MultiIndex& o) const {
    if (dim() != o.dim()) throw std::invalid_argument("multi-index dimension mismatch");
    MultiIndex r(e_.size());
    for (std::size_t i = 0; i < e_.size(); ++i) r[i] = e_[i] + o.e_[i];
    return r;
}

MultiIndex MultiIndex::minus(const MultiIndex& o) const {
    if (!o.leq_entrywise(*this)) throw std::invalid_argument("multi-index subtraction would go negative");
    MultiIndex r(e_.size());
    for (std::size_t i = 0; i < e_.size(); ++i) r[i] = e_[i] - o.e_[i];
    return r;
}

std::string MultiIndex::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < e_.size(); ++i) {
        if (i) os << ',';
        os << e_[i];
    }
    os << ')';
    return os.str();
}

bool lex_before(const MultiIndex& a, const MultiIndex& b) {
    for (int i = 0; i < a.dim() && i < b.dim(); ++i) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return false;
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("integer overflow in combinatorial coefficient");
    return r;
}

void enumerate_rec(int n, int k, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
    if (pos == n - 1) {
        cur[pos] = k;
        out.push_back(cur);
        return;
    }
    for (int v = k; v >= 0; --v) {
        cur[pos] = v;
        enumerate_rec(n, k - v, cur, pos + 1, out);
    }
}

}  // namespace

std::int64_t dim_sym(int n, int k) {
    if (n < 1 || k < 0) throw std::invalid_argument("dim_sym requires n >= 1, k >= 0");
    return binom(static_cast<std::int64_t>(n) + k - 1, n - 1);
}

std::int64_t dim_sym_total(int n, int k) {
    std::int64_t s = 0;
    for (int i = 1; i <= k; ++i) s += dim_sym(n, i);
    return s;
}

const std::vector<MultiIndex>& lex_basis(int n, int k) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::vector<MultiIndex>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(n, k);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (n < 1 || k < 0) throw std::invalid_argument("lex_basis requires n >= 1, k >= 0");
    std::vector<MultiIndex> basis;
    basis.reserve(static_cast<std::size_t>(dim_sym(n, k)));
    MultiIndex cur(static_cast<std::size_t>(n));
    enumerate_rec(n, k, cur, 0, basis);
    auto [pos, inserted] = cache.emplace(key, std::move(basis));
    (void)inserted;
    return pos->second;
}

int lex_rank(const MultiIndex& mi) {
    // count basis elements strictly before mi: those whose leading entry is
    // larger, then recurse on the tail
    int n = mi.dim();
    for (int i = 0; i < n; ++i)
        if (mi[static_cast<std::size_t>(i)] < 0)
            throw std::invalid_argument("lex_rank of a multi-index with a negative entry");
    int k = mi.modulus();
    std::int64_t rank = 0;
    for (int pos = 0; pos < n - 1; ++pos) {
        int rem_dim = n - pos - 1;
        for (int v = k; v > mi[static_cast<std::size_t>(pos)]; --v)
            rank += dim_sym(rem_dim, k - v);
        k -= mi[static_cast<std::size_t>(pos)];
    }
    return static_cast<int>(rank);
}

MultiIndex lex_unrank(int n, int k, int position) {
    std::int64_t d = dim_sym(n, k);
    if (position < 0 || position >= d) throw std::out_of_range("lex_unrank position out of range");
    MultiIndex mi(static_cast<std::size_t>(n));
    std::int64_t rest = position;
    for (int pos = 0; pos < n - 1; ++pos) {
        int rem_dim = n - pos - 1;
        for (int v = k;; --v) {
            std::int64_t block = dim_sym(rem_dim, k - v);
            if (rest < block) {
                mi[static_cast<std::size_t>(pos)] = v;
                k -= v;
                break;
            }
            rest -= block;
        }
    }
    mi[static_cast<std::size_t>(n - 1)] = k;
    return mi;
}

std::int64_t factorial(int n) {
    if (n < 0) throw std::invalid_argument("factorial of negative integer");
    std::int64_t r = 1;
    for (int i = 2; i <= n; ++i) r = checked_mul(r, i);
    return r;
}

std::int64_t binom(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t num = 1, den = 1;
    for (std::int64_t i = 0; i < k; ++i) {
        num = checked_mul(num, n - i);
        den = checked_mul(den, i + 1);
        // keep growth in check; gcd-free exact division happens at the end of
        // every prefix because prefix products of C(n,k) are integers
        if (num % den == 0) {
            num /= den;
            den = 1;
        }
    }
    return num / den;
}

std::int64_t multi_binom(const MultiIndex& k, const MultiIndex& p) {
    if (k.dim() != p.dim()) throw std::invalid_argument("multi_binom dimension mismatch");
    if (!p.leq_entrywise(k)) throw std::invalid_argument("multi_binom requires p <= k entrywise");
    std::int64_t r = 1;
    for (int i = 0; i < k.dim(); ++i)
        r = checked_mul(r, binom(k[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(i)]));
    return r;
}

std::int64_t multinomial(const MultiIndex& k) {
    std::int64_t r = 1;
    int total = 0;
    for (int i = 0; i < k.dim(); ++i) {
        int v = k[static_cast<std::size_t>(i)];
        if (v < 0) throw std::invalid_argument("multinomial of negative entry");
        total += v;
        r = checked_mul(r, binom(total, v));
    }
    return r;
}

std::int64_t partition_coeff(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("partition_coeff of empty part list");
    int k = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i] < 1) throw std::invalid_argument("partition_coeff parts must be >= 1");
        if (i > 0 && parts[i] < parts[i - 1])
            throw std::invalid_argument("partition_coeff parts must be nondecreasing");
        k += parts[i];
    }
    // multinomial C(k; i_1, ..., i_j)
    std::int64_t r = 1;
    int total = 0;
    for (int part : parts) {
        total += part;
        r = checked_mul(r, binom(total, part));
    }
    (void)k;
    // divide by multiplicities of repeated sizes
    std::size_t i = 0;
    while (i < parts.size()) {
        std::size_t j = i;
        while (j < parts.size() && parts[j] == parts[i]) ++j;
        r /= factorial(static_cast<int>(j - i));
        i = j;
    }
    return r;
}

std::vector<std::vector<int>> partitions_into(int k, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    // nondecreasing parts, each >= previous
    auto rec = [&](auto&& self, int remaining, int slots, int minimum) -> void {
        if (slots == 1) {
            if (remaining >= minimum) {
                cur.push_back(remaining);
                out.push_back(cur);
                cur.pop_back();
            }
            return;
        }
        for (int v = minimum; v * slots <= remaining; ++v) {
            cur.push_back(v);
            self(self, remaining - v, slots - 1, v);
            cur.pop_back();
        }
    };
    if (r >= 1 && k >= r) rec(rec, k, r, 1);
    return out;
}

}  // namespace varjet
