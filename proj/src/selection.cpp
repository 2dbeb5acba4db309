#include "scs/selection.hpp"

#include <cstdio>

namespace scs {

SelectionMask::SelectionMask(std::uint64_t bits, int n_assets) : bits_(bits), n_assets_(n_assets) {
    if (n_assets < 1 || n_assets > kMaskBitLimit)
        throw std::invalid_argument("mask universe size out of range: " + std::to_string(n_assets));
    if (bits == 0) throw std::invalid_argument("empty selection is not a valid mask");
    if (bits >> n_assets) throw std::invalid_argument("mask has bits outside the universe");
}

std::string SelectionMask::to_string() const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "0x%llx/%d", static_cast<unsigned long long>(bits_), n_assets_);
    return buf;
}

SelectionMask SelectionMask::parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos || text.rfind("0x", 0) != 0)
        throw std::invalid_argument("mask must look like 0x<hex>/<N>: '" + text + "'");
    std::size_t used = 0;
    const std::string hex = text.substr(2, slash - 2);
    const std::string n = text.substr(slash + 1);
    unsigned long long bits = 0;
    int n_assets = 0;
    try {
        bits = std::stoull(hex, &used, 16);
        if (used != hex.size()) throw std::invalid_argument("trailing characters");
        n_assets = std::stoi(n, &used);
        if (used != n.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse mask '" + text + "'");
    }
    return SelectionMask(bits, n_assets);
}

SelectionMask SelectionMask::full(int n_assets) {
    return SelectionMask((std::uint64_t{1} << n_assets) - 1, n_assets);
}

SelectionMask SelectionMask::singleton(int asset, int n_assets) {
    if (asset < 0 || asset >= n_assets) throw std::invalid_argument("asset index out of range");
    return SelectionMask(std::uint64_t{1} << asset, n_assets);
}

bool is_strict_subset(const SelectionMask& a, const SelectionMask& b) {
    if (a.universe() != b.universe()) throw std::invalid_argument("masks over different universes");
    return a.bits() != b.bits() && (a.bits() & ~b.bits()) == 0;
}

std::vector<int> assets_of(const SelectionMask& mask) {
    std::vector<int> out;
    for (std::uint64_t bits = mask.bits(); bits; bits &= bits - 1) out.push_back(std::countr_zero(bits));
    return out;
}

GrayEnumerator::GrayEnumerator(int n_assets, int max_assets)
    : GrayEnumerator(n_assets, 1, total(n_assets > 0 && n_assets <= kMaskBitLimit ? n_assets : 1) + 1, max_assets) {}

GrayEnumerator::GrayEnumerator(int n_assets, std::uint64_t first, std::uint64_t last, int max_assets)
    : n_assets_(n_assets), next_(first), last_(last) {
    if (n_assets < 1 || n_assets > max_assets || n_assets > kMaskBitLimit)
        throw std::invalid_argument("universe size " + std::to_string(n_assets) + " outside [1, " +
                                    std::to_string(max_assets) + "]");
    if (first < 1 || last > total(n_assets) + 1 || first > last)
        throw std::invalid_argument("Gray position range out of bounds");
}

std::optional<GrayStep> GrayEnumerator::next() {
    if (next_ >= last_) return std::nullopt;
    const std::uint64_t pos = next_++;
    const std::uint64_t bits = gray_code(pos);
    // Going from position pos-1 to pos flips the bit at ctz(pos).
    const int flipped = std::countr_zero(pos);
    return GrayStep{SelectionMask(bits, n_assets_), flipped, ((bits >> flipped) & 1U) != 0};
}

std::vector<GrayStep> enumerate_gray(int n_assets, int max_assets) {
    GrayEnumerator gen(n_assets, max_assets);
    std::vector<GrayStep> out;
    out.reserve(GrayEnumerator::total(n_assets));
    while (auto step = gen.next()) out.push_back(*step);
    return out;
}

}  // namespace scs
