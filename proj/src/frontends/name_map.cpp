#include "nnedit/frontends/name_map.hpp"

namespace nnedit::frontends {

namespace {

std::vector<LayerName> caffe_rows() {
    using enum LayerType;
    const std::vector<ParamName> conv{{"num_output", "num_output"},
                                      {"kernel", "kernel_size"},
                                      {"stride", "stride"},
                                      {"pad", "pad"},
                                      {"bias_term", "bias_term"}};
    const std::vector<ParamName> recurrent{{"num_output", "num_output"}};
    return {
        {Input, "Input", "input_param", {{"shape", "shape"}},
         {"Data", "ImageData", "HDF5Data", "MemoryData", "DummyData", "WindowData"}},
        {Convolution, "Convolution", "convolution_param", conv, {}},
        {Deconvolution, "Deconvolution", "convolution_param", conv, {}},
        {Pooling, "Pooling", "pooling_param",
         {{"pool", "pool"}, {"kernel", "kernel_size"}, {"stride", "stride"}, {"pad", "pad"},
          {"global_pooling", "global_pooling"}},
         {}},
        {InnerProduct, "InnerProduct", "inner_product_param",
         {{"num_output", "num_output"}, {"bias_term", "bias_term"}}, {}},
        {ReLU, "ReLU", "relu_param", {}, {}},
        {Sigmoid, "Sigmoid", "sigmoid_param", {}, {}},
        {Tanh, "TanH", "tanh_param", {}, {}},
        {Softmax, "Softmax", "softmax_param", {}, {}},
        {SoftmaxWithLoss, "SoftmaxWithLoss", "softmax_param", {}, {}},
        {Accuracy, "Accuracy", "accuracy_param", {{"top_k", "top_k"}, {"axis", "axis"}}, {}},
        {LRN, "LRN", "lrn_param",
         {{"local_size", "local_size"}, {"alpha", "alpha"}, {"beta", "beta"}, {"k", "k"}}, {}},
        {Dropout, "Dropout", "dropout_param", {{"dropout_ratio", "dropout_ratio"}}, {}},
        {BatchNorm, "BatchNorm", "batch_norm_param",
         {{"eps", "eps"}, {"momentum", "moving_average_fraction"}}, {}},
        {Scale, "Scale", "scale_param", {{"bias_term", "bias_term"}}, {}},
        {Concat, "Concat", "concat_param", {{"axis", "axis"}}, {}},
        {Eltwise, "Eltwise", "eltwise_param", {{"operation", "operation"}}, {}},
        {Flatten, "Flatten", "flatten_param", {}, {}},
        {Reshape, "Reshape", "reshape_param", {{"shape", "shape"}}, {}},
        {RNN, "RNN", "recurrent_param", recurrent, {}},
        {LSTM, "LSTM", "recurrent_param", recurrent, {}},
        {Python, "Python", "python_param",
         {{"module", "module"}, {"layer", "layer"}, {"param_str", "param_str"}}, {}},
    };
}

std::vector<LayerName> keras_rows() {
    using enum LayerType;
    const std::vector<ParamName> conv{{"num_output", "filters"},
                                      {"kernel", "kernel_size"},
                                      {"stride", "strides"},
                                      {"bias_term", "use_bias"}};
    const std::vector<ParamName> recurrent{{"num_output", "units"},
                                           {"return_sequences", "return_sequences"}};
    return {
        {Input, "InputLayer", "", {{"shape", "batch_input_shape"}}, {}},
        {Convolution, "Conv2D", "", conv, {"Conv1D", "Conv3D", "Convolution1D", "Convolution2D", "Convolution3D"}},
        {Deconvolution, "Conv2DTranspose", "", conv, {"Conv1DTranspose", "Conv3DTranspose", "Deconvolution2D"}},
        {Pooling, "MaxPooling2D", "",
         {{"kernel", "pool_size"}, {"stride", "strides"}},
         {"MaxPooling1D", "MaxPooling3D", "AveragePooling1D", "AveragePooling2D", "AveragePooling3D",
          "GlobalMaxPooling1D", "GlobalMaxPooling2D", "GlobalMaxPooling3D", "GlobalAveragePooling1D",
          "GlobalAveragePooling2D", "GlobalAveragePooling3D"}},
        {InnerProduct, "Dense", "", {{"num_output", "units"}, {"bias_term", "use_bias"}}, {}},
        {ReLU, "Activation:relu", "", {}, {"ReLU"}},
        {Sigmoid, "Activation:sigmoid", "", {}, {}},
        {Tanh, "Activation:tanh", "", {}, {}},
        {Softmax, "Activation:softmax", "", {}, {"Softmax"}},
        {LRN, "LRN", "",
         {{"local_size", "n"}, {"alpha", "alpha"}, {"beta", "beta"}, {"k", "k"}}, {}},
        {Dropout, "Dropout", "", {{"dropout_ratio", "rate"}}, {}},
        {BatchNorm, "BatchNormalization", "", {{"eps", "epsilon"}, {"momentum", "momentum"}}, {}},
        {Concat, "Concatenate", "", {{"axis", "axis"}}, {}},
        {Eltwise, "Add", "", {}, {"Multiply", "Maximum"}},
        {Flatten, "Flatten", "", {}, {}},
        {Reshape, "Reshape", "", {{"shape", "target_shape"}}, {}},
        {Embedding, "Embedding", "", {{"input_dim", "input_dim"}, {"output_dim", "output_dim"}}, {}},
        {RNN, "SimpleRNN", "", recurrent, {}},
        {LSTM, "LSTM", "", recurrent, {}},
        {GRU, "GRU", "", recurrent, {}},
    };
}

}  // namespace

const NameMap& NameMap::get(Framework f) {
    static const NameMap caffe(Framework::Caffe, caffe_rows());
    static const NameMap keras(Framework::Keras, keras_rows());
    return f == Framework::Caffe ? caffe : keras;
}

const LayerName* NameMap::by_type(LayerType t) const {
    for (const auto& row : rows_)
        if (row.type == t) return &row;
    return nullptr;
}

const LayerName* NameMap::by_name(std::string_view framework_name) const {
    for (const auto& row : rows_) {
        if (row.framework == framework_name) return &row;
        for (const auto& alias : row.aliases)
            if (alias == framework_name) return &row;
    }
    return nullptr;
}

std::optional<std::string> NameMap::to_framework(LayerType t, std::string_view ir_key) const {
    if (const LayerName* row = by_type(t))
        for (const auto& p : row->params)
            if (p.ir == ir_key) return p.framework;
    return std::nullopt;
}

std::optional<std::string> NameMap::to_ir(LayerType t, std::string_view framework_key) const {
    if (const LayerName* row = by_type(t))
        for (const auto& p : row->params)
            if (p.framework == framework_key) return p.ir;
    return std::nullopt;
}

}  // namespace nnedit::frontends
