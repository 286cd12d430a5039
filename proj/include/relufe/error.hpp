#pragma once

#include <stdexcept>
#include <string>

namespace relufe {

// Each category maps to a distinct CLI exit code (see tools/relufe.cpp).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class CompileError : public Error {
public:
  using Error::Error;
};

class VerifyError : public Error {
public:
  using Error::Error;
};

}  // namespace relufe
