"""Graph-structured sparse recovery with variance-reduced hard thresholding."""
