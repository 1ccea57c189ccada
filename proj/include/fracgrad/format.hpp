#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace fracgrad {

/// Canonical numeric rendering for every file and console emission:
/// 17 significant digits, C locale, so outputs round-trip exactly and
/// golden files are byte-stable.
inline std::string format_signif17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Minimal JSON emitter with caller-controlled key order and the numeric
/// policy above.  Non-finite doubles are emitted as null: JSON has no inf
/// and the audit deliberately probes regimes that can produce it.
class JsonWriter {
  public:
    std::string str() const { return out_; }

    JsonWriter& begin_object() {
        separator();
        out_ += '{';
        stack_.push_back(true);
        return *this;
    }
    JsonWriter& end_object() {
        out_ += '}';
        stack_.pop_back();
        fresh_ = false;
        return *this;
    }
    JsonWriter& begin_array() {
        separator();
        out_ += '[';
        stack_.push_back(true);
        return *this;
    }
    JsonWriter& end_array() {
        out_ += ']';
        stack_.pop_back();
        fresh_ = false;
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        separator();
        append_string(k);
        out_ += ':';
        fresh_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        separator();
        if (std::isfinite(v))
            out_ += format_signif17(v);
        else
            out_ += "null";
        return *this;
    }
    JsonWriter& value(long v) {
        separator();
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(int v) { return value(static_cast<long>(v)); }
    JsonWriter& value(std::size_t v) { return value(static_cast<long>(v)); }
    JsonWriter& value(bool v) {
        separator();
        out_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        separator();
        append_string(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& null_value() {
        separator();
        out_ += "null";
        return *this;
    }
    /// Emit an already-formatted numeric token verbatim, so echoed values
    /// keep the exact bytes of their source document.  Tokens JSON cannot
    /// carry (inf/nan) degrade to null like `value(double)` does.
    JsonWriter& raw_number(const std::string& token) {
        separator();
        if (token.find_first_not_of("+-.0123456789eE") != std::string::npos)
            out_ += "null";
        else
            out_ += token;
        return *this;
    }

    template <class T>
    JsonWriter& kv(const std::string& k, const T& v) {
        key(k);
        return value(v);
    }

  private:
    void separator() {
        if (!fresh_ && !out_.empty() && out_.back() != '{' && out_.back() != '[' &&
            out_.back() != ':')
            out_ += ',';
        fresh_ = false;
    }
    void append_string(const std::string& s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char esc[8];
                        std::snprintf(esc, sizeof esc, "\\u%04x", c);
                        out_ += esc;
                    } else {
                        out_ += c;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> stack_;
    bool fresh_ = false;
};

}  // namespace fracgrad
