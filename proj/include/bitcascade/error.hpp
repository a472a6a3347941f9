#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bitcascade {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BITCASCADE_DEFINE_ERROR(Name)        \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

BITCASCADE_DEFINE_ERROR(NegativeValue);
BITCASCADE_DEFINE_ERROR(DuplicateTxId);
BITCASCADE_DEFINE_ERROR(NegativeFee);
BITCASCADE_DEFINE_ERROR(ConflictingClass);
BITCASCADE_DEFINE_ERROR(DuplicateAddress);
BITCASCADE_DEFINE_ERROR(InconsistentEntityLabel);
BITCASCADE_DEFINE_ERROR(UnknownAddress);
BITCASCADE_DEFINE_ERROR(EmptyFrame);
BITCASCADE_DEFINE_ERROR(SchemaMismatch);
BITCASCADE_DEFINE_ERROR(ClassTooSmall);
BITCASCADE_DEFINE_ERROR(UnknownEntity);
BITCASCADE_DEFINE_ERROR(LengthMismatch);
BITCASCADE_DEFINE_ERROR(BudgetTooSmall);
BITCASCADE_DEFINE_ERROR(InvalidConfig);

#undef BITCASCADE_DEFINE_ERROR

/// Syntax error in a line-oriented input; `line()` is 1-based.
class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace bitcascade
