#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dockpilot {

/// Shortest-ish decimal for logs ("%.10g").
std::string fmt_num(double v);
/// Round-trippable decimal ("%.17g").
std::string fmt_exact(double v);

/// 64-bit FNV-1a, printed as 16 hex digits by hash_hex.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hash_hex(std::uint64_t h);

/// splitmix64 finalizer; seed_mix derives independent child seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Worker count honoring DOCKPILOT_THREADS; applies it to the OpenMP runtime.
int configure_threads();

}  // namespace dockpilot
