#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nnedit/error.hpp"

namespace nnedit::textproto {

/// Byte range plus the 1-based line/column of `start`.
struct SourceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Line/column of `offset` in `input` (both 1-based, column counts bytes).
SourceSpan span_at(std::string_view input, std::size_t offset);

class Node;
using Field = std::pair<std::string, Node>;

/// Parsed value: a message (ordered multimap of fields), a string, a number,
/// or a bare identifier (enum value / boolean).
class Node {
public:
    enum class Kind { Message, Str, Num, Ident };
    using Number = std::variant<std::int64_t, double>;

    Node() = default;
    static Node message(std::vector<Field> fields = {});
    static Node str(std::string value);
    static Node num(Number value);
    static Node ident(std::string value);

    Kind kind() const { return kind_; }
    bool is_message() const { return kind_ == Kind::Message; }

    const std::vector<Field>& fields() const { return fields_; }
    std::vector<Field>& fields() { return fields_; }
    /// Str/Ident text.
    const std::string& text() const { return text_; }
    const Number& number() const { return number_; }
    double as_double() const;

    const SourceSpan& span() const { return span_; }
    void set_span(SourceSpan span) { span_ = span; }

    /// First field named `name`, or nullptr.
    const Node* find(std::string_view name) const;
    std::vector<const Node*> find_all(std::string_view name) const;
    Node& add(std::string name, Node value);

    /// Structural equality: kind, values, field names and order. Spans are
    /// ignored; NaN equals NaN.
    friend bool operator==(const Node& a, const Node& b);

private:
    Kind kind_ = Kind::Message;
    std::vector<Field> fields_;
    std::string text_;
    Number number_ = std::int64_t{0};
    SourceSpan span_;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, SourceSpan span, std::string code = "SyntaxError")
        : Error(std::move(code), message + " at line " + std::to_string(span.line) + ", column " +
                                      std::to_string(span.column)),
          span_(span) {}
    const SourceSpan& span() const noexcept { return span_; }

private:
    SourceSpan span_;
};

class UnterminatedString : public SyntaxError {
public:
    UnterminatedString(const std::string& message, SourceSpan span)
        : SyntaxError(message, span, "UnterminatedString") {}
};

class UnterminatedBlock : public SyntaxError {
public:
    UnterminatedBlock(const std::string& message, SourceSpan span)
        : SyntaxError(message, span, "UnterminatedBlock") {}
};

/// Parses the protobuf text-format subset used by Caffe prototxt:
///   message := field*
///   field   := IDENT ( ':' scalar | ':'? '{' message '}' )
///   scalar  := STRING | NUMBER | IDENT
/// `#` comments run to end of line; a leading UTF-8 BOM is skipped.
Node parse(std::string_view input);

/// Two-space indentation, one field per line. parse(print(n)) == n.
std::string print(const Node& message);

}  // namespace nnedit::textproto
