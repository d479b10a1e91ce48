#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace modelzip {

// Exit-code class of an error: user errors are bad input, everything else is internal.
enum class ErrorKind { user, internal };

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ErrorKind kind = ErrorKind::user)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] virtual const char* name() const noexcept { return "error"; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "invalid_argument"; }
};

// Payload or model problems found while arithmetic decoding. Carries the
// chunk and symbol position when known.
class CodecError : public Error {
public:
    CodecError(const std::string& what, std::optional<std::size_t> symbol_index = {},
               std::optional<std::size_t> chunk_index = {})
        : Error(what), symbol_index_(symbol_index), chunk_index_(chunk_index) {}

    [[nodiscard]] const char* name() const noexcept override { return "codec_error"; }
    [[nodiscard]] std::optional<std::size_t> symbol_index() const noexcept { return symbol_index_; }
    [[nodiscard]] std::optional<std::size_t> chunk_index() const noexcept { return chunk_index_; }

private:
    std::optional<std::size_t> symbol_index_;
    std::optional<std::size_t> chunk_index_;
};

class FormatError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "format_error"; }
};

class ContextOverflow : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "context_overflow"; }
};

class IntegrityError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "integrity_error"; }
};

class ProtocolError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "protocol_error"; }
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what, ErrorKind::internal) {}
    [[nodiscard]] const char* name() const noexcept override { return "transport_error"; }
};

// An error raised while evaluating one document, tagged with its id.
// Keeps the kind and name of the underlying error.
class DocumentError : public Error {
public:
    DocumentError(const std::string& doc_id, const Error& inner)
        : Error("document " + doc_id + ": " + inner.what(), inner.kind()), doc_id_(doc_id), inner_name_(inner.name()) {}

    [[nodiscard]] const char* name() const noexcept override { return inner_name_.c_str(); }
    [[nodiscard]] const std::string& doc_id() const noexcept { return doc_id_; }

private:
    std::string doc_id_;
    std::string inner_name_;
};

}  // namespace modelzip
