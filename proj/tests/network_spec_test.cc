// Copyright 2026 The convfeat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convfeat/network_spec.h"

#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/synthetic.h"

namespace convfeat {
namespace {

using ::testing::AllOf;
using ::testing::HasSubstr;

std::string AlexNetPath() { return std::string(CONVFEAT_MODELS_DIR) + "/alexnet.spec"; }

Error ErrorOf(const std::string& text) {
  try {
    load_spec(text);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "spec loaded without error";
  return Error(ErrorCode::kInvalidArgument, "");
}

TEST(NetworkSpecTest, ShippedAlexNet) {
  const NetworkSpec spec = load_spec_file(AlexNetPath());
  EXPECT_EQ(spec.input_shape(), (Shape4{1, 3, 224, 224}));
  int convs = 0, fcs = 0;
  for (const LayerSpec& l : spec.layers) {
    convs += l.kind == LayerKind::kConv;
    fcs += l.kind == LayerKind::kFc;
  }
  EXPECT_EQ(convs, 5);
  EXPECT_EQ(fcs, 3);
  const auto shapes = LayerOutputShapes(spec);
  EXPECT_EQ(shapes.back(), (Shape4{1, 1000, 1, 1}));
  EXPECT_EQ(spec.layers.back().kind, LayerKind::kSoftmax);
  EXPECT_EQ(shapes[*spec.find("fc6")].sample_size(), 4096u);
  EXPECT_EQ(shapes[*spec.find("pool5")].sample_size(), 9216u);
  EXPECT_EQ(shapes[*spec.find("conv1")], (Shape4{1, 96, 55, 55}));
}

TEST(NetworkSpecTest, AlexNetParameterShapes) {
  const NetworkSpec spec = load_spec_file(AlexNetPath());
  const ParamShape fc6 = ParameterShape(spec, *spec.find("fc6"));
  EXPECT_EQ(fc6.weights, (Shape4{4096, 9216, 1, 1}));
  EXPECT_EQ(fc6.bias, 4096u);
  const ParamShape conv2 = ParameterShape(spec, *spec.find("conv2"));
  EXPECT_EQ(conv2.weights, (Shape4{256, 96, 5, 5}));
}

TEST(NetworkSpecTest, FcMismatchNamesBothLayers) {
  const Error e = ErrorOf(
      "data input channels=1 height=8 width=8\n"
      "conv1 conv num_output=2 kernel=3 pad=1\n"
      "fc2 fc num_output=3 num_input=100\n");
  EXPECT_EQ(e.code(), ErrorCode::kShapeChainError);
  EXPECT_THAT(e.what(), AllOf(HasSubstr("fc2"), HasSubstr("conv1")));
}

TEST(NetworkSpecTest, DuplicateName) {
  const Error e = ErrorOf(
      "data input channels=1 height=4 width=4\n"
      "fc6 fc num_output=3\n"
      "fc6 fc num_output=3\n");
  EXPECT_EQ(e.code(), ErrorCode::kDuplicateName);
  EXPECT_THAT(e.what(), HasSubstr("fc6"));
}

TEST(NetworkSpecTest, ParseErrorsCarryLineNumbers) {
  const Error e = ErrorOf(
      "data input channels=1 height=4 width=4\n"
      "# comment\n"
      "x frobnicate\n");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_THAT(e.what(), HasSubstr("line 3"));
  EXPECT_EQ(ErrorOf("data input channels=1 height=4 width=4\n"
                    "c conv num_output=2 kernel=x\n")
                .code(),
            ErrorCode::kParseError);
  EXPECT_EQ(ErrorOf("data input channels=1 height=4 width=4\n"
                    "c conv num_output=2 kernel=3 color=red\n")
                .code(),
            ErrorCode::kParseError);
  EXPECT_EQ(ErrorOf("c conv num_output=2 kernel=3\n").code(), ErrorCode::kParseError);
  EXPECT_EQ(ErrorOf("").code(), ErrorCode::kParseError);
}

TEST(NetworkSpecTest, SoftmaxOnlyAtTheEnd) {
  EXPECT_EQ(ErrorOf("data input channels=1 height=4 width=4\n"
                    "p softmax\n"
                    "fc fc num_output=2\n")
                .code(),
            ErrorCode::kShapeChainError);
  EXPECT_NO_THROW(load_spec("data input channels=1 height=4 width=4\n"
                            "fc fc num_output=2\n"
                            "p softmax\n"));
}

TEST(NetworkSpecTest, WindowsMustDivideExactly) {
  EXPECT_EQ(ErrorOf("data input channels=1 height=6 width=6\n"
                    "p pool window=3 stride=2\n")
                .code(),
            ErrorCode::kShapeChainError);
}

TEST(NetworkSpecTest, SerializeRoundTrip) {
  for (const std::string& text :
       {std::string(testing::kTinySpec), std::string(testing::kSourceSpec)}) {
    const NetworkSpec a = load_spec(text);
    const NetworkSpec b = load_spec(serialize_spec(a));
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_spec(a), serialize_spec(b));
    EXPECT_EQ(SpecFingerprint(a), SpecFingerprint(b));
  }
  const NetworkSpec alex = load_spec_file(AlexNetPath());
  EXPECT_EQ(load_spec(serialize_spec(alex)), alex);
}

TEST(NetworkSpecTest, CanonicalSerialization) {
  const NetworkSpec spec = load_spec(
      "# hand-written\n"
      "data input channels=3 height=8 width=8\n"
      "c1 conv num_output=4 kernel_h=3 kernel_w=3 pad=1\n"
      "n1 lrn local_size=3 alpha=0.0001\n"
      "p1 pool window=2 stride=2\n"
      "f1 fc num_output=5\n");
  EXPECT_EQ(serialize_spec(spec),
            "data input channels=3 height=8 width=8\n"
            "c1 conv num_output=4 kernel=3 stride=1 pad=1\n"
            "n1 lrn local_size=3 alpha=1e-04 beta=0.75 k=2\n"
            "p1 pool window=2 stride=2\n"
            "f1 fc num_output=5\n");
}

TEST(NetworkSpecTest, LayerKindNames) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kPool, LayerKind::kRelu, LayerKind::kLrn,
                      LayerKind::kFc, LayerKind::kDropout, LayerKind::kSoftmax}) {
    EXPECT_EQ(ParseLayerKind(LayerKindName(k)), k);
  }
  EXPECT_FALSE(ParseLayerKind("deconv").has_value());
}

}  // namespace
}  // namespace convfeat
