#include "satire/html.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "satire/error.hpp"
#include "satire/util/text.hpp"

namespace satire::html {

namespace {

const std::unordered_set<std::string> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr"};

const std::unordered_set<std::string> kRawTextElements = {"script", "style", "noscript", "template"};

const std::unordered_set<std::string> kBlockElements = {
    "address", "article", "blockquote", "br", "dd", "div", "dl", "dt", "figcaption", "figure",
    "footer", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "ol", "p",
    "pre", "section", "table", "td", "th", "tr", "ul"};

const std::unordered_set<std::string> kSkippedElements = {
    "script", "style", "noscript", "template", "nav", "aside", "form", "button", "iframe", "svg"};

// Elements whose start tag implicitly closes an open <p>.
const std::unordered_set<std::string> kClosesParagraph = {
    "p", "div", "ul", "ol", "table", "h1", "h2", "h3", "h4", "h5", "h6",
    "section", "article", "aside", "header", "footer", "blockquote", "pre"};

void append_utf8(std::string& out, unsigned long cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

const std::unordered_map<std::string, unsigned long> kNamedEntities = {
    {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
    {"apos", '\''},    {"nbsp", ' '},     {"copy", 0xA9},    {"reg", 0xAE},
    {"ndash", 0x2013}, {"mdash", 0x2014}, {"hellip", 0x2026}, {"lsquo", 0x2018},
    {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"euro", 0x20AC},
    {"auml", 0xE4},    {"ouml", 0xF6},    {"aring", 0xE5},   {"Auml", 0xC4},
    {"Ouml", 0xD6},    {"Aring", 0xC5},   {"eacute", 0xE9},  {"uuml", 0xFC},
    {"shy", 0xAD},     {"middot", 0xB7},  {"deg", 0xB0}};

struct Parser {
    std::string_view src;
    std::size_t pos = 0;

    bool starts_with_ci(std::string_view prefix) const {
        if (src.size() - pos < prefix.size()) return false;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(src[pos + i])) !=
                std::tolower(static_cast<unsigned char>(prefix[i]))) {
                return false;
            }
        }
        return true;
    }

    void skip_space() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    std::string read_name() {
        std::size_t start = pos;
        while (pos < src.size()) {
            char c = src[pos];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
            ++pos;
        }
        return ascii_lower(src.substr(start, pos - start));
    }

    std::string read_attr_value() {
        if (pos >= src.size()) return {};
        char q = src[pos];
        if (q == '"' || q == '\'') {
            ++pos;
            std::size_t end = src.find(q, pos);
            if (end == std::string_view::npos) end = src.size();
            std::string value = decode_entities(src.substr(pos, end - pos));
            pos = std::min(end + 1, src.size());
            return value;
        }
        std::size_t start = pos;
        while (pos < src.size() && !std::isspace(static_cast<unsigned char>(src[pos])) && src[pos] != '>') ++pos;
        return decode_entities(src.substr(start, pos - start));
    }
};

void add_text(Node* parent, std::string_view raw) {
    if (raw.empty()) return;
    auto decoded = decode_entities(raw);
    if (!parent->children.empty() && parent->children.back()->is_text()) {
        parent->children.back()->text += decoded;
        return;
    }
    auto node = std::make_unique<Node>();
    node->text = std::move(decoded);
    node->parent = parent;
    parent->children.push_back(std::move(node));
}

// ---- selectors -------------------------------------------------------------

struct AttrTest {
    std::string name;
    std::optional<std::string> value;
};

struct Compound {
    std::string tag;  // empty or "*" = any
    std::vector<std::string> classes;
    std::string id;
    std::vector<AttrTest> attrs;
    bool child_of_previous = false;  // combinator linking this to the previous compound
};

using Complex = std::vector<Compound>;

std::vector<Complex> parse_selector(std::string_view text) {
    std::vector<Complex> groups;
    Complex current;
    std::size_t i = 0;
    bool pending_child = false;
    auto fail = [&] { throw ParseError("unsupported selector: " + std::string(text)); };
    auto is_ident = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == ',') {
            if (current.empty() || pending_child) fail();
            groups.push_back(std::move(current));
            current.clear();
            ++i;
            continue;
        }
        if (c == '>') {
            if (current.empty() || pending_child) fail();
            pending_child = true;
            ++i;
            continue;
        }
        Compound comp;
        comp.child_of_previous = pending_child;
        pending_child = false;
        if (c == '*') {
            comp.tag = "*";
            ++i;
        } else if (is_ident(c)) {
            std::size_t s = i;
            while (i < text.size() && is_ident(text[i])) ++i;
            comp.tag = ascii_lower(text.substr(s, i - s));
        }
        while (i < text.size()) {
            char d = text[i];
            if (d == '.' || d == '#') {
                ++i;
                std::size_t s = i;
                while (i < text.size() && is_ident(text[i])) ++i;
                if (i == s) fail();
                auto name = std::string(text.substr(s, i - s));
                if (d == '.') comp.classes.push_back(name);
                else comp.id = name;
            } else if (d == '[') {
                auto close = text.find(']', i);
                if (close == std::string_view::npos) fail();
                auto inner = text.substr(i + 1, close - i - 1);
                AttrTest test;
                auto eq = inner.find('=');
                test.name = ascii_lower(trim(inner.substr(0, eq)));
                if (eq != std::string_view::npos) {
                    auto v = trim(inner.substr(eq + 1));
                    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
                        v = v.substr(1, v.size() - 2);
                    }
                    test.value = v;
                }
                if (test.name.empty()) fail();
                comp.attrs.push_back(std::move(test));
                i = close + 1;
            } else {
                break;
            }
        }
        if (comp.tag.empty() && comp.classes.empty() && comp.id.empty() && comp.attrs.empty()) fail();
        current.push_back(std::move(comp));
    }
    if (current.empty() || pending_child) fail();
    groups.push_back(std::move(current));
    return groups;
}

bool matches(const Compound& c, const Node& n) {
    if (n.is_text() || n.tag == "#root") return false;
    if (!c.tag.empty() && c.tag != "*" && c.tag != n.tag) return false;
    for (const auto& cls : c.classes) {
        if (!n.has_class(cls)) return false;
    }
    if (!c.id.empty() && n.attr("id") != c.id) return false;
    for (const auto& a : c.attrs) {
        auto it = n.attrs.find(a.name);
        if (it == n.attrs.end()) return false;
        if (a.value && it->second != *a.value) return false;
    }
    return true;
}

// Right-to-left match of compounds [0, idx] ending at node n.
bool matches_complex(const Complex& sel, std::size_t idx, const Node& n) {
    if (!matches(sel[idx], n)) return false;
    if (idx == 0) return true;
    bool child = sel[idx].child_of_previous;
    for (const Node* p = n.parent; p != nullptr; p = p->parent) {
        if (matches_complex(sel, idx - 1, *p)) return true;
        if (child) return false;
    }
    return false;
}

void flatten_into(const Node& node, std::string& out) {
    if (node.is_text()) {
        // Source line breaks inside a text run are just whitespace.
        for (char c : node.text) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
        return;
    }
    if (kSkippedElements.count(node.tag)) return;
    if (node.tag == "br") {
        out.push_back('\n');
        return;
    }
    bool block = kBlockElements.count(node.tag) > 0;
    if (block) out.push_back('\n');
    for (const auto& child : node.children) flatten_into(*child, out);
    if (block) out.push_back('\n');
}

}  // namespace

std::string Node::attr(const std::string& name) const {
    auto it = attrs.find(name);
    return it == attrs.end() ? std::string{} : it->second;
}

bool Node::has_class(std::string_view cls) const {
    auto it = attrs.find("class");
    if (it == attrs.end()) return false;
    for (const auto& token : split_whitespace(it->second)) {
        if (token == cls) return true;
    }
    return false;
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(s[i++]);
            continue;
        }
        auto name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            unsigned long cp = 0;
            bool ok = name.size() > 1;
            bool hex = ok && (name[1] == 'x' || name[1] == 'X');
            for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
                char c = name[k];
                if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
                    cp = cp * 16 + static_cast<unsigned long>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (std::tolower(c) - 'a' + 10));
                } else if (!hex && std::isdigit(static_cast<unsigned char>(c))) {
                    cp = cp * 10 + static_cast<unsigned long>(c - '0');
                } else {
                    ok = false;
                }
            }
            if (ok && name.size() > (hex ? 2u : 1u)) {
                append_utf8(out, cp);
                i = semi + 1;
                continue;
            }
        } else if (auto it = kNamedEntities.find(std::string(name)); it != kNamedEntities.end()) {
            append_utf8(out, it->second);
            i = semi + 1;
            continue;
        }
        out.push_back(s[i++]);
    }
    return out;
}

Document Document::parse(std::string_view source) {
    Document doc;
    doc.root_ = std::make_unique<Node>();
    doc.root_->tag = "#root";
    Parser p{source};
    std::vector<Node*> stack{doc.root_.get()};

    auto close_to = [&](const std::string& tag) {
        for (std::size_t k = stack.size(); k-- > 1;) {
            if (stack[k]->tag == tag) {
                stack.resize(k);
                return;
            }
        }
    };

    std::size_t text_start = 0;
    while (p.pos < source.size()) {
        if (source[p.pos] != '<') {
            ++p.pos;
            continue;
        }
        add_text(stack.back(), source.substr(text_start, p.pos - text_start));
        if (p.starts_with_ci("<!--")) {
            auto end = source.find("-->", p.pos + 4);
            p.pos = end == std::string_view::npos ? source.size() : end + 3;
        } else if (p.starts_with_ci("<!") || p.starts_with_ci("<?")) {
            auto end = source.find('>', p.pos);
            p.pos = end == std::string_view::npos ? source.size() : end + 1;
        } else if (p.starts_with_ci("</")) {
            p.pos += 2;
            auto name = p.read_name();
            auto end = source.find('>', p.pos);
            p.pos = end == std::string_view::npos ? source.size() : end + 1;
            if (!name.empty()) close_to(name);
        } else if (p.pos + 1 < source.size() && std::isalpha(static_cast<unsigned char>(source[p.pos + 1]))) {
            ++p.pos;
            auto node = std::make_unique<Node>();
            node->tag = p.read_name();
            bool self_closing = false;
            while (p.pos < source.size()) {
                p.skip_space();
                if (p.pos >= source.size()) break;
                if (source[p.pos] == '>') {
                    ++p.pos;
                    break;
                }
                if (source[p.pos] == '/') {
                    self_closing = true;
                    ++p.pos;
                    continue;
                }
                auto attr_name = p.read_name();
                if (attr_name.empty()) {
                    ++p.pos;
                    continue;
                }
                p.skip_space();
                std::string value;
                if (p.pos < source.size() && source[p.pos] == '=') {
                    ++p.pos;
                    p.skip_space();
                    value = p.read_attr_value();
                }
                node->attrs.emplace(std::move(attr_name), std::move(value));
            }
            if (kClosesParagraph.count(node->tag) && stack.back()->tag == "p") stack.pop_back();
            if (node->tag == "li" && stack.back()->tag == "li") stack.pop_back();
            Node* raw = node.get();
            raw->parent = stack.back();
            stack.back()->children.push_back(std::move(node));
            if (kRawTextElements.count(raw->tag)) {
                // Skip the element body entirely; its content is never text.
                std::string closing = "</" + raw->tag;
                while (p.pos < source.size() && !p.starts_with_ci(closing)) ++p.pos;
                auto end = source.find('>', p.pos);
                p.pos = end == std::string_view::npos ? source.size() : end + 1;
            } else if (!self_closing && !kVoidElements.count(raw->tag)) {
                stack.push_back(raw);
            }
        } else {
            // A literal '<' in text.
            ++p.pos;
            add_text(stack.back(), "<");
        }
        text_start = p.pos;
    }
    add_text(stack.back(), source.substr(text_start, std::min(p.pos, source.size()) - text_start));
    return doc;
}

std::vector<const Node*> Document::select(std::string_view selector) const {
    auto groups = parse_selector(selector);
    std::vector<const Node*> out;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        for (const auto& g : groups) {
            if (matches_complex(g, g.size() - 1, n)) {
                out.push_back(&n);
                break;
            }
        }
        for (const auto& c : n.children) walk(*c);
    };
    walk(*root_);
    return out;
}

const Node* Document::select_first(std::string_view selector) const {
    auto all = select(selector);
    return all.empty() ? nullptr : all.front();
}

std::string flatten_text(const Node& node) {
    std::string raw;
    flatten_into(node, raw);
    std::string out;
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        auto collapsed = collapse_whitespace(line);
        if (collapsed.empty()) continue;
        if (!out.empty()) out.push_back('\n');
        out += collapsed;
    }
    return out;
}

}  // namespace satire::html
