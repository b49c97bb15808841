#pragma once

#include <stdexcept>
#include <string>

namespace softseq {

/** Base class for every error thrown by this library. */
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/** State or sequence count exceeds the configured budget. */
class CapacityError : public Error {
 public:
  using Error::Error;
};

/** A sequence or prefix is malformed for its space (bad token id, bad EOS
 *  placement, bad length). */
class InvalidSequenceError : public Error {
 public:
  using Error::Error;
};

/** Conditioning on a zero-mass prefix, or an absolute-continuity violation
 *  between two distributions. */
class SupportError : public Error {
 public:
  using Error::Error;
};

/** A distribution-level invariant failed: rows or totals do not normalize,
 *  or next-token mass leaks past the horizon. */
class ValidityError : public Error {
 public:
  using Error::Error;
};

/** A state or table admits no feasible continuation (all log-weights -inf). */
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/** An operation was invoked in a length mode it does not support. */
class ModeError : public Error {
 public:
  using Error::Error;
};

/** Training risk exceeded ten times its initial value (step too large). */
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/** Malformed configuration document, serialized table, or argument shape. */
class SchemaError : public Error {
 public:
  using Error::Error;
};

/** Filesystem failure while reading or writing artifacts. */
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace softseq
