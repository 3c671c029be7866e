#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aesthetics {

// Base of every error the library throws. The CLI maps the category onto an
// exit code, so each subclass declares which bucket it belongs to.
class Error : public std::runtime_error {
 public:
  enum class Category { kUsage, kData, kRuntime };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

// Precondition on a numeric argument failed (negative count, bad fraction...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(Category::kData, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(Category::kData, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Category::kData, what) {}
};

class DecodeError : public Error {
 public:
  explicit DecodeError(const std::string& what) : Error(Category::kData, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(Category::kData, what) {}
};

class LoadError : public Error {
 public:
  explicit LoadError(const std::string& what) : Error(Category::kData, what) {}
};

// A named record could not be used (e.g. its image is missing or corrupt).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::kData, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::kRuntime, what) {}
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& what) : Error(Category::kRuntime, what) {}
};

}  // namespace aesthetics
