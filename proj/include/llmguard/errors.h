#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmguard {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid policy, manifest, or other configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller supplied arguments that violate an operation's preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& detail)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " +
              detail),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class UnsupportedVersionError : public Error {
 public:
  explicit UnsupportedVersionError(unsigned version)
      : Error("unsupported bundle format version " + std::to_string(version)),
        version_(version) {}
  unsigned version() const { return version_; }

 private:
  unsigned version_;
};

// Corrupt or truncated binary payload.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& detail)
      : Error("parse error at byte " + std::to_string(offset) + ": " + detail),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A detector's bundle or pattern set could not be loaded.
class ResourceError : public Error {
 public:
  ResourceError(const std::string& detector_id, const std::string& detail)
      : Error("detector '" + detector_id + "': " + detail),
        detector_id_(detector_id) {}
  const std::string& detector_id() const { return detector_id_; }

 private:
  std::string detector_id_;
};

// Malformed corpus file; line is 1-based, 0 when the file itself failed.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& path, std::size_t line,
                 const std::string& detail)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) +
              ": " + detail),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// The upstream LLM could not produce a response. Never a policy block.
class UpstreamError : public Error {
 public:
  using Error::Error;
};

}  // namespace llmguard
