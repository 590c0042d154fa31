#ifndef GRIDSIGHT_ERROR_HPP
#define GRIDSIGHT_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridsight {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public Error {
public:
    DecodeError(std::string path, const std::string& cause)
        : Error("cannot decode " + path + ": " + cause), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(long expected, long actual)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(actual)) {}
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class InsufficientLabels : public Error {
public:
    using Error::Error;
};

class UnknownId : public Error {
public:
    explicit UnknownId(std::string id) : Error("unknown id: " + id), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class EmptyQuerySet : public Error {
public:
    EmptyQuerySet() : Error("query set would be empty") {}
};

class NonFiniteInput : public Error {
public:
    NonFiniteInput() : Error("vector contains non-finite components") {}
};

class CorruptIndex : public Error {
public:
    CorruptIndex(std::uint64_t offset, const std::string& what)
        : Error("corrupt index at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidFilter : public Error {
public:
    using Error::Error;
};

}  // namespace gridsight

#endif  // GRIDSIGHT_ERROR_HPP
