"""Physical constants, result records and plotting."""
