#include "nnedit/zoo/zoo.hpp"

#include <array>
#include <stdexcept>
#include <utility>

namespace nnedit::zoo {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kFiles[];
extern const std::size_t kFileCount;
}  // namespace detail

namespace {

std::string_view file_text(std::string_view filename) {
    for (std::size_t i = 0; i < detail::kFileCount; ++i)
        if (detail::kFiles[i].first == filename) return detail::kFiles[i].second;
    throw std::logic_error("zoo file not embedded: " + std::string(filename));
}

std::array<Entry, 10> build() {
    using F = Framework;
    std::array<Entry, 10> out{{
        {"vgg16", F::Caffe, "vgg16.prototxt", "VGG-16, 16 weight layers (deploy)", {}},
        {"alexnet", F::Caffe, "alexnet.prototxt", "AlexNet with LRN, ungrouped convolutions", {}},
        {"googlenet", F::Caffe, "googlenet.prototxt", "GoogLeNet (Inception v1) with LRN", {}},
        {"squeezenet", F::Caffe, "squeezenet.prototxt", "SqueezeNet v1.1, train/val with loss and accuracy", {}},
        {"inception_v3", F::Caffe, "inception_v3.prototxt", "Inception-v3 style network with factorized 7x1/1x7 convolutions", {}},
        {"resnet50", F::Caffe, "resnet50.prototxt", "ResNet-50 bottleneck residual network", {}},
        {"lenet", F::Caffe, "lenet.prototxt", "LeNet for 28x28 digits", {}},
        {"mnist_cnn", F::Keras, "mnist_cnn.json", "Keras Sequential MNIST convnet", {}},
        {"imdb_lstm", F::Keras, "imdb_lstm.json", "Keras Sequential Embedding + LSTM sentiment model", {}},
        {"vqa", F::Keras, "vqa.json", "Two-input visual question answering model", {}},
    }};
    for (auto& e : out) e.text = file_text(e.filename);
    return out;
}

}  // namespace

std::span<const Entry> entries() {
    static const std::array<Entry, 10> table = build();
    return table;
}

const Entry* find(std::string_view name) {
    for (const auto& e : entries())
        if (e.name == name) return &e;
    return nullptr;
}

}  // namespace nnedit::zoo
