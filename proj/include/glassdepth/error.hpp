#pragma once

#include <stdexcept>
#include <string>

namespace glassdepth {

// Every failure the library reports derives from Error. The concrete type
// says what went wrong; callers that only need a message catch Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Data is well-formed but carries too little information to solve.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

class DegenerateSamples : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class NoValidPixels : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class NoViableCandidate : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class InvalidDepth : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class DegenerateGeometry : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class DegenerateHull : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class NoOverlap : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class ParallelRay : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class BehindCamera : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

class EmptyCloud : public DegenerateData {
 public:
  using DegenerateData::DegenerateData;
};

// File content does not match the expected format.
class BadFormat : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace glassdepth
