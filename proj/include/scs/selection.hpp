#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scs {

inline constexpr int kMaskBitLimit = 62;
inline constexpr int kDefaultMaxAssets = 25;

/// Nonzero subset of an N-asset universe; bit j set means asset j is held.
class SelectionMask {
public:
    SelectionMask(std::uint64_t bits, int n_assets);

    std::uint64_t bits() const noexcept { return bits_; }
    int universe() const noexcept { return n_assets_; }
    bool contains(int asset) const noexcept { return (bits_ >> asset) & 1U; }

    /// Lowercase hex plus universe size, e.g. "0x5b/17".
    std::string to_string() const;
    static SelectionMask parse(const std::string& text);

    static SelectionMask full(int n_assets);
    static SelectionMask singleton(int asset, int n_assets);

    friend bool operator==(const SelectionMask&, const SelectionMask&) = default;
    friend auto operator<=>(const SelectionMask& a, const SelectionMask& b) { return a.bits_ <=> b.bits_; }

private:
    std::uint64_t bits_;
    int n_assets_;
};

inline int weight(const SelectionMask& mask) noexcept { return std::popcount(mask.bits()); }

/// support(a) is a proper subset of support(b). Throws on mismatched universes.
bool is_strict_subset(const SelectionMask& a, const SelectionMask& b);

std::vector<int> assets_of(const SelectionMask& mask);

/// Reflected Gray code position -> mask bits.
constexpr std::uint64_t gray_code(std::uint64_t index) noexcept { return index ^ (index >> 1); }

struct GrayStep {
    SelectionMask mask;
    int flipped_asset;
    bool added;
};

/// Streams all 2^N - 1 nonzero masks in reflected Gray order starting at mask 1.
/// A sub-range [first, last) of Gray positions may be requested for block-parallel
/// passes; positions are 1-based (position 0 would be the empty mask).
class GrayEnumerator {
public:
    explicit GrayEnumerator(int n_assets, int max_assets = kDefaultMaxAssets);
    GrayEnumerator(int n_assets, std::uint64_t first, std::uint64_t last, int max_assets = kDefaultMaxAssets);

    std::optional<GrayStep> next();
    std::uint64_t position() const noexcept { return next_; }

    static std::uint64_t total(int n_assets) noexcept { return (std::uint64_t{1} << n_assets) - 1; }

private:
    int n_assets_;
    std::uint64_t next_;
    std::uint64_t last_;
};

std::vector<GrayStep> enumerate_gray(int n_assets, int max_assets = kDefaultMaxAssets);

}  // namespace scs
