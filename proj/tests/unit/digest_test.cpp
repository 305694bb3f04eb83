#include <gtest/gtest.h>

#include "reference_digest.hpp"
#include "webgraph/digest.hpp"
#include "webgraph/rng.hpp"

using namespace webgraph;

// RFC 4648 section 10, RFC 1321 appendix A.5 and RFC 3174 / FIPS 180 vectors
// pin the reference implementations before they are used as oracles.
TEST(ReferenceDigest, Base64Vectors) {
  EXPECT_EQ(refdigest::base64(""), "");
  EXPECT_EQ(refdigest::base64("f"), "Zg==");
  EXPECT_EQ(refdigest::base64("fo"), "Zm8=");
  EXPECT_EQ(refdigest::base64("foo"), "Zm9v");
  EXPECT_EQ(refdigest::base64("foob"), "Zm9vYg==");
  EXPECT_EQ(refdigest::base64("fooba"), "Zm9vYmE=");
  EXPECT_EQ(refdigest::base64("foobar"), "Zm9vYmFy");
}

TEST(ReferenceDigest, Md5Vectors) {
  EXPECT_EQ(refdigest::md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(refdigest::md5_hex("a"), "0cc175b9c0f1b6a831c399e269772661");
  EXPECT_EQ(refdigest::md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(refdigest::md5_hex("message digest"), "f96b697d7cb7938d525a2f31aaf161d0");
  EXPECT_EQ(refdigest::md5_hex("abcdefghijklmnopqrstuvwxyz"), "c3fcd3d76192e4007dfb496cca67e13b");
  EXPECT_EQ(refdigest::md5_hex(
                "12345678901234567890123456789012345678901234567890123456789012345678901234567890"),
            "57edf4a22be3c955ac49da2e2107b67a");
}

TEST(ReferenceDigest, Sha1Vectors) {
  EXPECT_EQ(refdigest::sha1_hex(""), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  EXPECT_EQ(refdigest::sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_EQ(refdigest::sha1_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "84983e441c3bd26ebaae4aa1f95129e5e54670f1");
}

TEST(Digest, AgreesWithReferenceOnRandomInputs) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::string s(rng.uniform(150), '\0');
    for (auto& c : s) c = static_cast<char>(rng.uniform(256));
    EXPECT_EQ(base64_encode(s), refdigest::base64(s));
    EXPECT_EQ(md5_hex(s), refdigest::md5_hex(s));
    EXPECT_EQ(sha1_hex(s), refdigest::sha1_hex(s));
  }
}

TEST(Digest, HexEncode) {
  EXPECT_EQ(hex_encode(std::string("\x00\xff\x10", 3)), "00ff10");
  EXPECT_EQ(hex_encode(""), "");
}
