"""REST service: authentication, persistence, background simulation jobs."""
