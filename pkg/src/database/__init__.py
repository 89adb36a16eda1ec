# Output store