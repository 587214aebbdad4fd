#include "sdb/codec/error.hpp"

namespace sdb::codec {

const char* to_string(DecodeErrorKind kind) {
    switch (kind) {
        case DecodeErrorKind::TooShort: return "TooShort";
        case DecodeErrorKind::BadMagicCookie: return "BadMagicCookie";
        case DecodeErrorKind::MalformedOption: return "MalformedOption";
        case DecodeErrorKind::UnknownOpcode: return "UnknownOpcode";
        case DecodeErrorKind::UnterminatedString: return "UnterminatedString";
        case DecodeErrorKind::MultipleQuestions: return "MultipleQuestions";
        case DecodeErrorKind::TruncatedLabel: return "TruncatedLabel";
        case DecodeErrorKind::Unsupported: return "Unsupported";
    }
    return "DecodeError";
}

const char* to_string(EncodeErrorKind kind) {
    switch (kind) {
        case EncodeErrorKind::OversizeOption: return "OversizeOption";
        case EncodeErrorKind::DuplicateOption: return "DuplicateOption";
        case EncodeErrorKind::FieldTooLong: return "FieldTooLong";
        case EncodeErrorKind::MissingMessageType: return "MissingMessageType";
        case EncodeErrorKind::InvalidName: return "InvalidName";
    }
    return "EncodeError";
}

}  // namespace sdb::codec
