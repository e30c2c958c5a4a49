#include "affchan/types.hpp"

#include <array>
#include <unordered_map>

#include "affchan/common.hpp"

namespace affchan {

namespace {

const std::array<std::pair<ChannelKind, std::string>, kNumChannels> kSlugs = {{
    {ChannelKind::Video, "video"},
    {ChannelKind::ConstantBlur, "constant_blur"},
    {ChannelKind::AdaptiveBlur, "adaptive_blur"},
    {ChannelKind::ObjectCrops, "object_crops"},
    {ChannelKind::ObjectRetained, "object_retained"},
    {ChannelKind::Fc8, "fc8"},
    {ChannelKind::Gist, "gist"},
    {ChannelKind::EyeRoi, "eye_roi"},
    {ChannelKind::EyeHist, "eye_hist"},
    {ChannelKind::EyeRoiContextBlur, "eye_roi_context_blur"},
}};

}  // namespace

const std::string& channel_slug(ChannelKind k) {
    for (const auto& [kind, slug] : kSlugs)
        if (kind == k) return slug;
    throw Error("unknown channel kind");
}

ChannelKind channel_from_slug(const std::string& slug) {
    for (const auto& [kind, s] : kSlugs)
        if (s == slug) return kind;
    throw ParseError("unknown channel: " + slug);
}

const std::vector<ChannelKind>& all_channels() {
    static const std::vector<ChannelKind> all = [] {
        std::vector<ChannelKind> v;
        for (const auto& [kind, slug] : kSlugs) v.push_back(kind);
        return v;
    }();
    return all;
}

bool channel_is_frame_scoped(ChannelKind k) {
    return k != ChannelKind::EyeHist;
}

const std::string& affect_dim_name(AffectDim d) {
    static const std::string val = "valence", aro = "arousal";
    return d == AffectDim::Valence ? val : aro;
}

AffectDim affect_dim_from_name(const std::string& name) {
    if (name == "valence") return AffectDim::Valence;
    if (name == "arousal") return AffectDim::Arousal;
    throw ParseError("unknown affect dimension: " + name);
}

const VideoRecord* DatasetManifest::find_video(const std::string& id) const {
    for (const auto& v : videos)
        if (v.id == id) return &v;
    return nullptr;
}

const VideoRecord& DatasetManifest::video(const std::string& id) const {
    const VideoRecord* v = find_video(id);
    if (!v) throw IntegrityError("unknown video id: " + id);
    return *v;
}

}  // namespace affchan
