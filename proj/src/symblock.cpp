#include "symblock.hpp"

#include <map>
#include <mutex>

namespace varjet {

namespace detail {

const std::vector<int>& sum_rank_table(int n, int order_a, int order_b) {
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int>, std::vector<int>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(n, order_a, order_b);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const auto& basis_a = lex_basis(n, order_a);
    const auto& basis_b = lex_basis(n, order_b);
    std::vector<int> table(basis_a.size() * basis_b.size());
    for (std::size_t ra = 0; ra < basis_a.size(); ++ra)
        for (std::size_t rb = 0; rb < basis_b.size(); ++rb)
            table[ra * basis_b.size() + rb] = lex_rank(basis_a[ra].plus(basis_b[rb]));
    auto [pos, inserted] = cache.emplace(key, std::move(table));
    (void)inserted;
    return pos->second;
}

}  // namespace detail

std::vector<double> sym_vector_power(std::span<const double> v, int k) {
    int n = static_cast<int>(v.size());
    const auto& basis = lex_basis(n, k);
    std::vector<double> out(basis.size());
    for (std::size_t r = 0; r < basis.size(); ++r) {
        const MultiIndex& mi = basis[r];
        double c = static_cast<double>(multinomial(mi));
        for (int j = 0; j < n; ++j)
            for (int p = 0; p < mi[static_cast<std::size_t>(j)]; ++p) c *= v[static_cast<std::size_t>(j)];
        out[r] = c;
    }
    return out;
}

SymBlockD sym_vector_power_block(std::span<const double> v, int k) {
    int n = static_cast<int>(v.size());
    SymBlockD b(k, 0, n, n);
    auto coords = sym_vector_power(v, k);
    for (int r = 0; r < b.rows(); ++r) b(r, 0) = coords[static_cast<std::size_t>(r)];
    return b;
}

}  // namespace varjet
