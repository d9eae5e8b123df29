#pragma once

#include <stdexcept>
#include <string>

namespace irx {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CompositionError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

// Gateway errors. TransportError carries the last HTTP status seen (0 when
// the connection itself failed).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class CredentialError : public Error {
 public:
  using Error::Error;
};

class RefusalError : public Error {
 public:
  RefusalError(const std::string& what, std::string provider_message)
      : Error(what), provider_message_(std::move(provider_message)) {}
  const std::string& provider_message() const noexcept { return provider_message_; }

 private:
  std::string provider_message_;
};

}  // namespace irx
