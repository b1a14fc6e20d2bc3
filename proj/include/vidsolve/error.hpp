// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidsolve {

enum class ErrorCode {
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    DimOverflow,
    BadShape,
    IoError,
    UnsupportedChannels,
    CropTooLarge,
    EmptyResult,
    BadRange,
    BadNfe,
    ShapeMismatch,
    EtaTooLarge,
    BadKernel,
    NonDivisible,
    BadRatio,
    BadArgument,
    NonFiniteEncountered,
    EmptyGrid,
    SingleFrame,
    FrameTooSmall,
    Timeout,
    ProtocolVersionMismatch,
    PeerClosed,
    ExternalProtocolError,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::DimOverflow: return "DimOverflow";
        case ErrorCode::BadShape: return "BadShape";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::UnsupportedChannels: return "UnsupportedChannels";
        case ErrorCode::CropTooLarge: return "CropTooLarge";
        case ErrorCode::EmptyResult: return "EmptyResult";
        case ErrorCode::BadRange: return "BadRange";
        case ErrorCode::BadNfe: return "BadNfe";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EtaTooLarge: return "EtaTooLarge";
        case ErrorCode::BadKernel: return "BadKernel";
        case ErrorCode::NonDivisible: return "NonDivisible";
        case ErrorCode::BadRatio: return "BadRatio";
        case ErrorCode::BadArgument: return "BadArgument";
        case ErrorCode::NonFiniteEncountered: return "NonFiniteEncountered";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::SingleFrame: return "SingleFrame";
        case ErrorCode::FrameTooSmall: return "FrameTooSmall";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ProtocolVersionMismatch: return "ProtocolVersionMismatch";
        case ErrorCode::PeerClosed: return "PeerClosed";
        case ErrorCode::ExternalProtocolError: return "ExternalProtocolError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` is the
/// stable, testable part and `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail, bool from_external = false)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), external_(from_external) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for failures of the external denoiser process, including shape
    /// errors in its replies.
    bool is_external() const noexcept {
        return external_ || code_ == ErrorCode::Timeout || code_ == ErrorCode::ProtocolVersionMismatch ||
               code_ == ErrorCode::PeerClosed || code_ == ErrorCode::ExternalProtocolError;
    }

private:
    ErrorCode code_;
    bool external_ = false;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

inline void require(bool cond, ErrorCode code, const std::string& detail) {
    if (!cond) fail(code, detail);
}

}  // namespace vidsolve
