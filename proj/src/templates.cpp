#include "pforge/templates.hpp"

#include <cctype>
#include <cstdlib>

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

#ifndef PF_TEMPLATES_DIR
#define PF_TEMPLATES_DIR "templates"
#endif

namespace pforge {

TextTemplate::TextTemplate(std::string text) : text_(std::move(text)) {
  std::size_t pos = 0;
  while ((pos = text_.find('{', pos)) != std::string::npos) {
    const std::size_t end = text_.find('}', pos + 1);
    if (end == std::string::npos) break;
    const std::string name = text_.substr(pos + 1, end - pos - 1);
    // Only identifier-shaped spans are placeholders; JSON braces or prose
    // braces in a template body are left alone.
    bool identifier = !name.empty();
    for (char c : name) {
      if (!std::islower(static_cast<unsigned char>(c)) && c != '_') {
        identifier = false;
        break;
      }
    }
    if (identifier) {
      bool known = false;
      for (const auto& existing : placeholders_) {
        if (existing == name) {
          known = true;
          break;
        }
      }
      if (!known) placeholders_.push_back(name);
    }
    pos = end + 1;
  }
}

TextTemplate TextTemplate::from_file(const std::filesystem::path& path) {
  return TextTemplate(read_file(path));
}

std::string TextTemplate::render(const std::map<std::string, std::string>& values) const {
  for (const auto& name : placeholders_) {
    if (!values.count(name)) {
      throw ConfigError("template render: missing value for placeholder {" + name + "}");
    }
  }
  for (const auto& [key, _] : values) {
    bool known = false;
    for (const auto& name : placeholders_) {
      if (name == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("template render: unknown placeholder {" + key + "}");
  }

  // Single left-to-right pass over the template body, so substituted values
  // are never re-scanned: a prompt containing "{language}" stays verbatim.
  std::string out;
  out.reserve(text_.size());
  std::size_t pos = 0;
  while (pos < text_.size()) {
    const std::size_t brace = text_.find('{', pos);
    if (brace == std::string::npos) {
      out.append(text_, pos, std::string::npos);
      break;
    }
    out.append(text_, pos, brace - pos);
    const std::size_t end = text_.find('}', brace + 1);
    bool replaced = false;
    if (end != std::string::npos) {
      const std::string name = text_.substr(brace + 1, end - brace - 1);
      const auto it = values.find(name);
      if (it != values.end()) {
        out += it->second;
        pos = end + 1;
        replaced = true;
      }
    }
    if (!replaced) {
      out += '{';
      pos = brace + 1;
    }
  }
  return out;
}

std::filesystem::path template_dir() {
  const char* env = std::getenv("PFORGE_TEMPLATE_DIR");
  if (env && *env) return env;
  return PF_TEMPLATES_DIR;
}

TextTemplate load_template(const std::string& name) {
  const std::filesystem::path path = template_dir() / (name + ".txt");
  auto body = read_file_if_exists(path);
  if (!body) throw ConfigError("template not found: " + path.string());
  return TextTemplate(std::move(*body));
}

namespace {

struct LanguageEntry {
  const char* code;
  const char* display;
};

// The twelve target languages, in the order reports list them.
constexpr LanguageEntry kLanguages[] = {
    {"de", "German"},     {"es", "Spanish"},   {"cs", "Czech"},   {"uk", "Ukrainian"},
    {"el", "Greek"},      {"hu", "Hungarian"}, {"sk", "Slovak"},  {"hr", "Croatian"},
    {"lt", "Lithuanian"}, {"lv", "Latvian"},   {"eu", "Basque"},  {"cy", "Welsh"},
};

}  // namespace

const std::vector<std::string>& supported_languages() {
  static const std::vector<std::string> codes = [] {
    std::vector<std::string> v;
    for (const auto& entry : kLanguages) v.push_back(entry.code);
    return v;
  }();
  return codes;
}

const std::string& language_display_name(const std::string& code) {
  static const std::map<std::string, std::string> names = [] {
    std::map<std::string, std::string> m;
    for (const auto& entry : kLanguages) m[entry.code] = entry.display;
    m["en"] = "English";
    return m;
  }();
  const auto it = names.find(code);
  if (it == names.end()) throw ConfigError("unsupported language code: \"" + code + "\"");
  return it->second;
}

}  // namespace pforge
