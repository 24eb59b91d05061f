"""Mining-pool strategy simulation: block withholding, selfish mining, detection"""
