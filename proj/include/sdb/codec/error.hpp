#pragma once

#include <stdexcept>
#include <string>

namespace sdb::codec {

enum class DecodeErrorKind {
    TooShort,
    BadMagicCookie,
    MalformedOption,
    UnknownOpcode,
    UnterminatedString,
    MultipleQuestions,
    TruncatedLabel,
    Unsupported,
};

enum class EncodeErrorKind {
    OversizeOption,
    DuplicateOption,
    FieldTooLong,
    MissingMessageType,
    InvalidName,
};

const char* to_string(DecodeErrorKind kind);
const char* to_string(EncodeErrorKind kind);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
    DecodeErrorKind kind() const { return kind_; }

private:
    DecodeErrorKind kind_;
};

class EncodeError : public std::runtime_error {
public:
    EncodeError(EncodeErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
    EncodeErrorKind kind() const { return kind_; }

private:
    EncodeErrorKind kind_;
};

}  // namespace sdb::codec
