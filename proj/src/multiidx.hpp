#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace varjet {

// Exponent vector in Z_{>=0}^n. Indexes the monomial bases of the symmetric
// powers Sym^k K^n; the basis of a fixed order k is enumerated in decreasing
// lexicographic order of the exponent vector, so for n = 3, k = 2 the order
// is (2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::size_t n, int fill = 0) : e_(n, fill) {}
    MultiIndex(std::initializer_list<int> init) : e_(init) {}

    int dim() const { return static_cast<int>(e_.size()); }
    int operator[](std::size_t i) const { return e_[i]; }
    int& operator[](std::size_t i) { return e_[i]; }

    // |i| = sum of entries
    int modulus() const;

    bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
    bool operator!=(const MultiIndex& o) const { return e_ != o.e_; }

    // true when every entry of *this is <= the matching entry of o
    bool leq_entrywise(const MultiIndex& o) const;

    MultiIndex plus(const MultiIndex& o) const;
    MultiIndex minus(const MultiIndex& o) const;  // requires o.leq_entrywise(*this)

    std::string to_string() const;

    const std::vector<int>& entries() const { return e_; }

private:
    std::vector<int> e_;
};

// strict decreasing-lex comparison: a comes before b in the basis order
bool lex_before(const MultiIndex& a, const MultiIndex& b);

// d_{n,k} = C(n+k-1, n-1), the dimension of Sym^k K^n
std::int64_t dim_sym(int n, int k);

// D_{n,k} = sum_{i=1..k} d_{n,i}
std::int64_t dim_sym_total(int n, int k);

// All multi-indices of modulus k in dimension n, decreasing lex order.
// The returned reference stays valid for the lifetime of the process.
const std::vector<MultiIndex>& lex_basis(int n, int k);

// Position of mi inside lex_basis(mi.dim(), mi.modulus()).
int lex_rank(const MultiIndex& mi);

MultiIndex lex_unrank(int n, int k, int position);

std::int64_t factorial(int n);
std::int64_t binom(std::int64_t n, std::int64_t k);

// product of entrywise binomials, Pi_j C(k_j, p_j); requires p <= k entrywise
std::int64_t multi_binom(const MultiIndex& k, const MultiIndex& p);

// C(|k|; k_1, ..., k_n) = |k|! / (k_1! ... k_n!)
std::int64_t multinomial(const MultiIndex& k);

// c^k_{i_1..i_j}: number of set partitions of k = i_1+...+i_j elements into
// blocks of sizes i_1 <= ... <= i_j (multinomial divided by the factorials of
// the multiplicities of repeated sizes).
std::int64_t partition_coeff(const std::vector<int>& parts);

// All partitions of k into exactly r parts >= 1, each nondecreasing.
std::vector<std::vector<int>> partitions_into(int k, int r);

}  // namespace varjet
