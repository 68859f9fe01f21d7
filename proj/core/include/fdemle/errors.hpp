#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdemle {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition on a function argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class IoError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Requested operation is outside what the model class supports.
class CapabilityError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int step);
    int step() const { return step_; }

private:
    int step_;
};

class SingularityError : public NumericError {
public:
    SingularityError(const std::string& what, int node, double condition);
    int node() const { return node_; }
    double condition() const { return condition_; }

private:
    int node_;
    double condition_;
};

class EmbeddingError : public NumericError {
public:
    using NumericError::NumericError;
};

class UnreliableScoreError : public Error {
public:
    UnreliableScoreError(const std::string& what, int observation);
    int observation() const { return observation_; }

private:
    int observation_;
};

}  // namespace fdemle
