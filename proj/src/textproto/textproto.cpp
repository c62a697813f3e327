#include "nnedit/textproto/textproto.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>

namespace nnedit::textproto {

SourceSpan span_at(std::string_view input, std::size_t offset) {
    SourceSpan span{offset, offset, 1, 1};
    const std::size_t stop = std::min(offset, input.size());
    for (std::size_t i = 0; i < stop; ++i) {
        if (input[i] == '\n') {
            ++span.line;
            span.column = 1;
        } else {
            ++span.column;
        }
    }
    return span;
}

// ---------------------------------------------------------------------------
// Node

Node Node::message(std::vector<Field> fields) {
    Node n;
    n.kind_ = Kind::Message;
    n.fields_ = std::move(fields);
    return n;
}

Node Node::str(std::string value) {
    Node n;
    n.kind_ = Kind::Str;
    n.text_ = std::move(value);
    return n;
}

Node Node::num(Number value) {
    Node n;
    n.kind_ = Kind::Num;
    n.number_ = value;
    return n;
}

Node Node::ident(std::string value) {
    Node n;
    n.kind_ = Kind::Ident;
    n.text_ = std::move(value);
    return n;
}

double Node::as_double() const {
    return std::visit([](auto v) { return static_cast<double>(v); }, number_);
}

const Node* Node::find(std::string_view name) const {
    for (const auto& [key, value] : fields_)
        if (key == name) return &value;
    return nullptr;
}

std::vector<const Node*> Node::find_all(std::string_view name) const {
    std::vector<const Node*> out;
    for (const auto& [key, value] : fields_)
        if (key == name) out.push_back(&value);
    return out;
}

Node& Node::add(std::string name, Node value) {
    fields_.emplace_back(std::move(name), std::move(value));
    return fields_.back().second;
}

bool operator==(const Node& a, const Node& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
        case Node::Kind::Message:
            return a.fields_ == b.fields_;
        case Node::Kind::Str:
        case Node::Kind::Ident:
            return a.text_ == b.text_;
        case Node::Kind::Num:
            if (a.number_.index() != b.number_.index()) return false;
            if (const auto* da = std::get_if<double>(&a.number_)) {
                const double db = std::get<double>(b.number_);
                if (std::isnan(*da) && std::isnan(db)) return true;
                return std::memcmp(da, &db, sizeof(double)) == 0 || *da == db;
            }
            return a.number_ == b.number_;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, String, Number, Colon, LBrace, RBrace, End };

struct Token {
    Tok type = Tok::End;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;           // unescaped string or identifier
    Node::Number number;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view input) : in_(input) {
        if (in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    std::string_view input() const { return in_; }

    Token next() {
        skip_space_and_comments();
        Token t;
        t.start = pos_;
        if (pos_ >= in_.size()) {
            t.type = Tok::End;
            t.end = pos_;
            return t;
        }
        const char c = in_[pos_];
        if (c == ':' || c == '{' || c == '}') {
            t.type = c == ':' ? Tok::Colon : c == '{' ? Tok::LBrace : Tok::RBrace;
            t.end = ++pos_;
            return t;
        }
        if (c == '"' || c == '\'') return lex_string(t, c);
        if (digit(c) || c == '-' || c == '+' || (c == '.' && pos_ + 1 < in_.size() && digit(in_[pos_ + 1])))
            return lex_number(t);
        if (ident_start(c)) {
            while (pos_ < in_.size() && ident_char(in_[pos_])) ++pos_;
            t.end = pos_;
            t.text = std::string(in_.substr(t.start, t.end - t.start));
            if (auto special = special_float(t.text)) {
                t.type = Tok::Number;
                t.number = *special;
            } else {
                t.type = Tok::Ident;
            }
            return t;
        }
        throw SyntaxError(std::string("unexpected character '") + printable(c) + "'", span(pos_, pos_ + 1));
    }

    SourceSpan span(std::size_t start, std::size_t end) const {
        SourceSpan s = span_at(in_, start);
        s.end = std::min(end, in_.size());
        return s;
    }

private:
    static std::string printable(char c) {
        if (std::isprint(static_cast<unsigned char>(c))) return std::string(1, c);
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
        return buf;
    }

    static std::optional<double> special_float(std::string_view word) {
        if (word == "inf" || word == "infinity") return std::numeric_limits<double>::infinity();
        if (word == "nan") return std::numeric_limits<double>::quiet_NaN();
        return std::nullopt;
    }

    void skip_space_and_comments() {
        while (pos_ < in_.size()) {
            const char c = in_[pos_];
            if (c == '#') {
                while (pos_ < in_.size() && in_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    Token lex_string(Token& t, char quote) {
        ++pos_;
        std::string value;
        while (true) {
            if (pos_ >= in_.size() || in_[pos_] == '\n')
                throw UnterminatedString("string literal is not closed", span(t.start, pos_));
            const char c = in_[pos_++];
            if (c == quote) break;
            if (c != '\\') {
                value += c;
                continue;
            }
            if (pos_ >= in_.size()) throw UnterminatedString("string literal is not closed", span(t.start, pos_));
            const char e = in_[pos_++];
            switch (e) {
                case '"': value += '"'; break;
                case '\'': value += '\''; break;
                case '\\': value += '\\'; break;
                case 'n': value += '\n'; break;
                case 't': value += '\t'; break;
                case 'r': value += '\r'; break;
                default:
                    throw SyntaxError(std::string("unsupported escape '\\") + printable(e) + "'",
                                      span(pos_ - 2, pos_));
            }
        }
        t.type = Tok::String;
        t.end = pos_;
        t.text = std::move(value);
        return t;
    }

    Token lex_number(Token& t) {
        const std::size_t begin = pos_;
        bool negative = false;
        if (in_[pos_] == '-' || in_[pos_] == '+') {
            negative = in_[pos_] == '-';
            ++pos_;
            if (pos_ < in_.size() && ident_start(in_[pos_])) {
                const std::size_t word = pos_;
                while (pos_ < in_.size() && ident_char(in_[pos_])) ++pos_;
                auto special = special_float(in_.substr(word, pos_ - word));
                if (!special) throw SyntaxError("malformed number", span(begin, pos_));
                t.type = Tok::Number;
                t.number = negative ? -*special : *special;
                t.end = pos_;
                return t;
            }
        }
        const std::size_t digits = pos_;
        bool is_float = false;
        while (pos_ < in_.size() && digit(in_[pos_])) ++pos_;
        if (pos_ < in_.size() && in_[pos_] == '.') {
            is_float = true;
            ++pos_;
            while (pos_ < in_.size() && digit(in_[pos_])) ++pos_;
        }
        if (pos_ == digits || (pos_ == digits + 1 && is_float))
            throw SyntaxError("malformed number", span(begin, pos_ + 1));
        if (pos_ < in_.size() && (in_[pos_] == 'e' || in_[pos_] == 'E')) {
            is_float = true;
            ++pos_;
            if (pos_ < in_.size() && (in_[pos_] == '+' || in_[pos_] == '-')) ++pos_;
            const std::size_t exp = pos_;
            while (pos_ < in_.size() && digit(in_[pos_])) ++pos_;
            if (exp == pos_) throw SyntaxError("malformed exponent", span(begin, pos_ + 1));
        }
        if (pos_ < in_.size() && (in_[pos_] == 'f' || in_[pos_] == 'F') && is_float) ++pos_;
        if (pos_ < in_.size() && ident_char(in_[pos_]))
            throw SyntaxError("malformed number", span(begin, pos_ + 1));
        t.type = Tok::Number;
        t.end = pos_;

        std::string literal(in_.substr(digits, pos_ - digits));
        if (!literal.empty() && (literal.back() == 'f' || literal.back() == 'F')) literal.pop_back();
        if (literal.back() == '.') literal.pop_back();  // "1." is a float
        if (!is_float) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), v);
            if (ec == std::errc{} && ptr == literal.data() + literal.size()) {
                t.number = negative ? -v : v;
                return t;
            }
        }
        double d = 0;
        auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), d);
        if (ec != std::errc{} && ec != std::errc::result_out_of_range)
            throw SyntaxError("malformed number", span(begin, pos_));
        if (ec == std::errc::result_out_of_range) d = std::strtod(literal.c_str(), nullptr);
        t.number = negative ? -d : d;
        return t;
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Parser

const char* describe(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::String: return "string";
        case Tok::Number: return "number";
        case Tok::Colon: return "':'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::End: return "end of input";
    }
    return "token";
}

class Parser {
public:
    explicit Parser(std::string_view input) : lex_(input) { advance(); }

    Node parse_root() {
        Node root = Node::message();
        const std::size_t start = tok_.start;
        parse_fields(root, /*nested=*/false, 0);
        root.set_span(lex_.span(start, tok_.end));
        return root;
    }

private:
    void advance() { tok_ = lex_.next(); }

    [[noreturn]] void expected(const std::string& what) {
        throw SyntaxError("expected " + what + ", found " + describe(tok_.type), lex_.span(tok_.start, tok_.end));
    }

    void parse_fields(Node& msg, bool nested, std::size_t open_brace) {
        while (true) {
            if (tok_.type == Tok::End) {
                if (nested)
                    throw UnterminatedBlock("block opened here is not closed before end of input",
                                            lex_.span(open_brace, lex_.input().size()));
                return;
            }
            if (tok_.type == Tok::RBrace) {
                if (!nested) throw SyntaxError("unmatched '}'", lex_.span(tok_.start, tok_.end));
                return;
            }
            if (tok_.type != Tok::Ident) expected("field name");
            std::string name = tok_.text;
            const std::size_t field_start = tok_.start;
            advance();
            bool colon = false;
            if (tok_.type == Tok::Colon) {
                colon = true;
                advance();
            }
            if (tok_.type == Tok::LBrace) {
                const std::size_t brace = tok_.start;
                advance();
                Node child = Node::message();
                parse_fields(child, true, brace);
                child.set_span(lex_.span(brace, tok_.end));
                advance();  // '}'
                msg.add(std::move(name), std::move(child));
                continue;
            }
            if (!colon) expected("':' or '{' after field '" + name + "'");
            Node value;
            switch (tok_.type) {
                case Tok::String: value = Node::str(tok_.text); break;
                case Tok::Number: value = Node::num(tok_.number); break;
                case Tok::Ident: value = Node::ident(tok_.text); break;
                default: expected("value for field '" + name + "'");
            }
            value.set_span(lex_.span(tok_.start, tok_.end));
            (void)field_start;
            advance();
            msg.add(std::move(name), std::move(value));
        }
    }

    Lexer lex_;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Printer

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::string format_number(const Node::Number& n) {
    if (const auto* i = std::get_if<std::int64_t>(&n)) return std::to_string(*i);
    const double d = std::get<double>(n);
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string out(buf, ptr);
    // keep it lexing as a float
    if (out.find_first_of(".e") == std::string::npos) out += ".0";
    return out;
}

void print_fields(const Node& msg, int depth, std::string& out) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    for (const auto& [name, value] : msg.fields()) {
        out += indent;
        out += name;
        switch (value.kind()) {
            case Node::Kind::Message:
                out += " {\n";
                print_fields(value, depth + 1, out);
                out += indent + "}\n";
                continue;
            case Node::Kind::Str: out += ": " + quote(value.text()); break;
            case Node::Kind::Num: out += ": " + format_number(value.number()); break;
            case Node::Kind::Ident: out += ": " + value.text(); break;
        }
        out += '\n';
    }
}

}  // namespace

Node parse(std::string_view input) { return Parser(input).parse_root(); }

std::string print(const Node& message) {
    std::string out;
    print_fields(message, 0, out);
    return out;
}

}  // namespace nnedit::textproto
