"""Three-stage optimisation: SFT, sentence-level contrastive learning, token-level contrastive learning."""
