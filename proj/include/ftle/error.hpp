#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ftle {

// Error categories surfaced by the library. The CLI maps them onto exit codes.
enum class Errc {
  invalid_argument,
  io,
  bad_magic,
  unsupported_version,
  truncated,
  dim_mismatch,
  invalid_header,
  trailing_data,
  out_of_range_index,
  asymmetric_neighbors,
  invalid_topology,
  invalid_flowmap,
  domain_exit,
  degenerate_stencil,
  zero_horizon,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::io: return "i/o error";
    case Errc::bad_magic: return "bad magic";
    case Errc::unsupported_version: return "unsupported version";
    case Errc::truncated: return "truncated payload";
    case Errc::dim_mismatch: return "dimension mismatch";
    case Errc::invalid_header: return "invalid header";
    case Errc::trailing_data: return "trailing data";
    case Errc::out_of_range_index: return "neighbor index out of range";
    case Errc::asymmetric_neighbors: return "asymmetric neighbor pair";
    case Errc::invalid_topology: return "invalid topology";
    case Errc::invalid_flowmap: return "invalid flowmap";
    case Errc::domain_exit: return "domain exit";
    case Errc::degenerate_stencil: return "degenerate stencil";
    case Errc::zero_horizon: return "zero integration horizon";
  }
  return "unknown error";
}

// True for errors raised by the FTLE kernels themselves (as opposed to
// malformed inputs or files).
constexpr bool is_kernel_error(Errc code) noexcept {
  return code == Errc::degenerate_stencil || code == Errc::zero_horizon;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ftle
