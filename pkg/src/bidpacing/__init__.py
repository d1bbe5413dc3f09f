"""Budget pacing and bidding controllers for online ad auctions."""

__version__ = "0.1.0"
