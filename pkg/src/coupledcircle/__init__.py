"""Self-consistent transfer operators of mean-field coupled expanding circle maps."""
