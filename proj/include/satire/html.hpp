#pragma once

#include <map>
#include <optional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace satire::html {

struct Node {
    std::string tag;  // lowercase; empty for text nodes
    std::map<std::string, std::string> attrs;
    std::string text;  // decoded character data, text nodes only
    Node* parent = nullptr;
    std::vector<std::unique_ptr<Node>> children;

    bool is_text() const { return tag.empty(); }
    std::string attr(const std::string& name) const;
    bool has_class(std::string_view cls) const;
};

/// A forgiving HTML tree builder: unclosed elements are closed at the end of
/// their parent, stray end tags are ignored, and script/style bodies are
/// dropped. Good enough for news templates; not a conforming HTML5 parser.
class Document {
public:
    static Document parse(std::string_view source);

    const Node& root() const { return *root_; }

    /// Supported selector syntax: compound selectors made of an optional tag
    /// name or `*`, `.class`, `#id`, `[attr]`, `[attr=value]` (value quoted
    /// or bare), joined by descendant (whitespace) or child (`>`)
    /// combinators. A comma separates alternatives. Results are in document
    /// order without duplicates.
    std::vector<const Node*> select(std::string_view selector) const;

    const Node* select_first(std::string_view selector) const;

private:
    std::unique_ptr<Node> root_;
};

/// Decodes character references (named subset plus numeric forms).
std::string decode_entities(std::string_view s);

/// Flattens a subtree to plain text. Block-level element boundaries and <br>
/// become newlines, source line breaks inside text do not; navigation, asides, scripts and forms are skipped. Each output
/// line is whitespace-collapsed and empty lines are dropped.
std::string flatten_text(const Node& node);

}  // namespace satire::html
