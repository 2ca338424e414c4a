#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdt {

enum class Errc {
  NoChildren,
  InvalidVertex,
  MissingFile,
  RaggedRow,
  MissingTarget,
  InvalidTarget,
  ParseError,
  OutOfRange,
  DimensionMismatch,
  NaNInput,
  NonIntegral,
  InvalidLabels,
  InvalidTree,
  SizeGuard,
  InvalidConfig,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NoChildren: return "NoChildren";
    case Errc::InvalidVertex: return "InvalidVertex";
    case Errc::MissingFile: return "MissingFile";
    case Errc::RaggedRow: return "RaggedRow";
    case Errc::MissingTarget: return "MissingTarget";
    case Errc::InvalidTarget: return "InvalidTarget";
    case Errc::ParseError: return "ParseError";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NaNInput: return "NaNInput";
    case Errc::NonIntegral: return "NonIntegral";
    case Errc::InvalidLabels: return "InvalidLabels";
    case Errc::InvalidTree: return "InvalidTree";
    case Errc::SizeGuard: return "SizeGuard";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mdt
