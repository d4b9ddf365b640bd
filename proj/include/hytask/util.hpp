#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace hytask {

/// Shortest round-trip decimal form ("0.95", "8", "1e-10").
std::string format_number(double v);

/// Decimal form with at most 15 significant digits, for model text.
std::string format_probability(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t v);

/// Uniform double in [0, 1) with 53 random bits; identical across standard libraries.
double uniform01(std::mt19937_64 &rng);

/// Uniform integer in [0, n), rejection-sampled.
std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

} // namespace hytask
